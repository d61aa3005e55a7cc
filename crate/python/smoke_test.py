"""Smoke test for the forestlb_py extension module."""

import forestlb_py as fl


def main():
    f = fl.Forest([2, 1, 1], [0.0, 0.0, 0.0], [2.0, 1.0, 1.0], level=1)
    assert len(f) == 16
    f.refine([0, 0, 0], [7])
    f.enforce_two_to_one()
    f.check_invariants()
    assert len(f) == 23
    assert fl.Forest.from_text(f.to_text()).leaves() == f.leaves()
    assert sorted(f.order("hilbert")) == sorted(f.leaves())
    assert f.locate([0.1, 0.1, 0.1]) is not None

    assert fl.hilbert_index(0, 0, 0, 3) == 0
    assert sorted(fl.morton_index(x, y, z, 1) for x in (0, 1) for y in (0, 1) for z in (0, 1)) == list(range(8))
    assert fl.cut_loads([1, 1, 1, 1], 2) == [0, 0, 1, 1]

    run = fl.StaticRun(128)
    before = run.l_max()
    report = run.run_pipeline("sfc_hilbert")
    assert report["l_max_before"] == before
    assert report["l_max_after"] < before
    assert sum(run.loads()) > 0

    names, ps = fl.check_config('scenario = "static"\np_sweep = [1, 256]\nbalancers = ["diffusive"]')
    assert names == ["diffusive(10)"] and ps == [1, 256]
    csv = fl.run_experiment('scenario = "static"\np_sweep = [1]\nbalancers = ["sfc_morton"]')
    assert csv.startswith("scenario,balancer,p,")

    try:
        fl.check_config('scenario = "static"\np_sweep = [100]')
    except ValueError as e:
        assert "p_sweep[0]" in str(e)
    else:
        raise AssertionError("bad config accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()

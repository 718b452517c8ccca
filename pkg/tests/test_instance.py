import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fstsp.instance import (
    ELAPSED,
    FLIGHT_ONLY,
    InstanceError,
    VariantConfig,
    build_matrices,
    import_agatz,
    import_murray_dir,
    import_tsplib_fstsp,
    load_canonical,
    random_instance,
    save_canonical,
)
from fstsp.solution import enumerate_sorties, is_catalog_sortie

from conftest import make_instance


def canonical_dict(**over):
    d = {
        "n": 1,
        "tau": [[0, 5], [5, 0]],
        "tauD": [[0, 3], [3, 0]],
        "e": 1440,
        "sL": 1,
        "sR": 1,
        "eligible": [1],
        "variant": VariantConfig.preset("ponza").to_dict(),
    }
    d.update(over)
    return d


def test_minimal_file_loads(tmp_path):
    p = tmp_path / "one.json"
    p.write_text(json.dumps(canonical_dict()))
    inst = load_canonical(p)
    assert inst.n == 1
    assert inst.variant.endurance_mode == ELAPSED
    assert inst.e == 1440
    assert inst.name == "one"


@pytest.mark.parametrize(
    "over, needle",
    [
        ({"tau": [[0, -1], [5, 0]]}, "tau"),
        ({"tauD": [[0, 1, 2], [1, 0, 2], [2, 2, 0]]}, "shape"),
        ({"e": 0}, "endurance"),
        ({"eligible": [2]}, "eligible"),
        ({"sL": -1}, "setup"),
        ({"tau": [[1, 5], [5, 0]]}, "diagonal"),
    ],
)
def test_invalid_files_rejected(tmp_path, over, needle):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(canonical_dict(**over)))
    with pytest.raises(InstanceError, match=needle):
        load_canonical(p)


def test_missing_field_is_named(tmp_path):
    d = canonical_dict()
    del d["tauD"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(d))
    with pytest.raises(InstanceError, match="tauD"):
        load_canonical(p)


def test_infinite_endurance_roundtrip(tmp_path):
    inst = random_instance(6, "tspd", seed=3)
    p = tmp_path / "i.json"
    save_canonical(inst, p)
    assert json.loads(p.read_text())["e"] == "inf"
    back = load_canonical(p)
    assert math.isinf(back.e)
    assert back.variant == inst.variant


@given(st.integers(1, 9), st.integers(0, 10_000), st.sampled_from(["ponza", "murray", "tspd"]))
def test_canonical_roundtrip_is_exact(tmp_path_factory, n, seed, preset):
    inst = random_instance(n, preset, seed=seed)
    p = tmp_path_factory.mktemp("rt") / "i.json"
    save_canonical(inst, p)
    back = load_canonical(p)
    assert np.array_equal(back.tau, inst.tau) and np.array_equal(back.tau_d, inst.tau_d)
    assert (back.e, back.s_l, back.s_r, back.eligible, back.variant, back.n) == (
        inst.e, inst.s_l, inst.s_r, inst.eligible, inst.variant, inst.n
    )


def test_matrices_are_read_only():
    inst = random_instance(3)
    with pytest.raises(ValueError):
        inst.tau[0, 1] = 1.0


def test_presets():
    assert VariantConfig.preset("ponza") == VariantConfig(ELAPSED, False, True)
    assert VariantConfig.preset("murray") == VariantConfig(FLIGHT_ONLY, False, False)
    assert VariantConfig.preset("tspd", 2) == VariantConfig(ELAPSED, True, True, 2)
    with pytest.raises(InstanceError):
        VariantConfig.preset("other")
    tspd = random_instance(4, "ponza", seed=1).with_variant("tspd")
    assert math.isinf(tspd.e) and tspd.s_l == tspd.s_r == 0


def test_build_matrices_345():
    tau, tau_d = build_matrices([(0, 0), (3, 4)], "euclidean", "euclidean", 60, 60)
    assert tau[0, 1] == pytest.approx(5) and tau_d[0, 1] == pytest.approx(5)
    tau, tau_d = build_matrices([(0, 0), (3, 4)], "manhattan", "euclidean", 60, 60)
    assert tau[0, 1] == pytest.approx(7) and tau_d[0, 1] == pytest.approx(5)
    tau, tau_d = build_matrices([(0, 0), (3, 4), (1, 7)], "euclidean", "euclidean", 30, 60)
    assert np.allclose(tau_d, tau / 2)
    with pytest.raises(InstanceError):
        build_matrices([(0, 0), (1, 1)], truck_speed=0)


@given(st.lists(st.tuples(st.floats(-50, 50), st.floats(-50, 50)), min_size=2, max_size=12))
def test_manhattan_dominates_euclidean(points):
    tau, tau_d = build_matrices(points, "manhattan", "euclidean", 40, 40)
    assert np.all(tau >= tau_d - 1e-9)


def brute_catalog(inst):
    out = []
    for i in range(inst.n + 1):
        for k in sorted(inst.eligible):
            for j in range(inst.n + 1):
                if k in (i, j):
                    continue
                if i == j != 0 and not inst.variant.allow_launch_equals_return:
                    continue
                if inst.tau_d[i, k] + inst.tau_d[k, j] <= inst.e + 1e-9:
                    out.append((i, k, j))
    return out


@given(st.integers(1, 20), st.integers(0, 1000), st.sampled_from(["ponza", "murray", "tspd"]))
def test_catalog_matches_triple_scan(n, seed, preset):
    inst = random_instance(n, preset, seed=seed)
    assert list(enumerate_sorties(inst)) == brute_catalog(inst)


def test_catalog_examples():
    inst = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], preset="tspd")
    cat = set(enumerate_sorties(inst))
    assert (0, 1, 0) in cat and (1, 2, 1) in cat and (0, 1, 2) in cat
    tiny = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]], e=1e-3)
    assert len(enumerate_sorties(tiny)) == 0
    ponza = make_instance([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    assert (0, 1, 0) in enumerate_sorties(ponza)
    assert not is_catalog_sortie(ponza, 2, 1, 2)


TSPLIB = """NAME : four
TYPE : TSP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
ENDURANCE : 30
NODE_COORD_SECTION
1 0 0
2 3 4
3 6 0
4 0 8
DRONE_ELIGIBLE_SECTION
2 4 -1
EOF
"""


def test_tsplib_import(tmp_path):
    p = tmp_path / "four.tsp"
    p.write_text(TSPLIB)
    inst = import_tsplib_fstsp(p)
    assert inst.n == 3 and inst.name == "four" and inst.e == 30
    assert inst.eligible == {1, 3}
    assert inst.tau[0, 1] == pytest.approx(7 / 40 * 60)
    assert inst.tau_d[0, 1] == pytest.approx(5 / 40 * 60)
    assert np.all(inst.tau >= inst.tau_d - 1e-12)


def test_tsplib_bad_record_reports_line(tmp_path):
    p = tmp_path / "bad.tsp"
    p.write_text(TSPLIB.replace("3 6 0", "3 six 0"))
    with pytest.raises(InstanceError, match=":9:"):
        import_tsplib_fstsp(p)
    e = tmp_path / "empty.tsp"
    e.write_text("")
    with pytest.raises(InstanceError):
        import_tsplib_fstsp(e)


AGATZ = """/*The speed of the Truck*/
1
/*The speed of the Drone*/
2
/*Number of Nodes*/
4
/*The Depot*/
0 0 depot
/*The Locations (x_coor y_coor name)*/
3 4 loc1
-3 4 loc2
0 -5 loc3
"""


def test_agatz_import(tmp_path):
    p = tmp_path / "uniform-1-n4.txt"
    p.write_text(AGATZ)
    inst = import_agatz(p)
    assert inst.n == 3 and inst.variant.alpha == 2
    assert inst.s_l == inst.s_r == 0 and math.isinf(inst.e)
    assert inst.variant.allow_launch_equals_return
    assert inst.tau[0, 1] == pytest.approx(5) and inst.tau_d[0, 1] == pytest.approx(2.5)
    e = tmp_path / "empty.txt"
    e.write_text("")
    with pytest.raises(InstanceError):
        import_agatz(e)


def test_murray_directory(tmp_path):
    base = random_instance(4, "murray", seed=2)
    t = np.vstack([np.hstack([base.tau, base.tau[:, :1]]), np.append(base.tau[0], 0)])
    td = np.vstack([np.hstack([base.tau_d, base.tau_d[:, :1]]), np.append(base.tau_d[0], 0)])
    np.savetxt(tmp_path / "tau.csv", t, delimiter=",")
    np.savetxt(tmp_path / "tauprime.csv", td, delimiter=",")
    weights = [0] + [1 if c in base.eligible else 9 for c in base.customers] + [0]
    (tmp_path / "nodes.csv").write_text("% id,wt\n" + "".join(f"{k},{w}\n" for k, w in enumerate(weights)))
    inst = import_murray_dir(tmp_path, 20, 1, 1)
    assert inst.n == 4 and inst.eligible == base.eligible
    assert np.allclose(inst.tau, base.tau) and np.allclose(inst.tau_d, base.tau_d)
    assert inst.variant.endurance_mode == FLIGHT_ONLY
    (tmp_path / "nodes.csv").write_text("0,a\n")
    with pytest.raises(InstanceError, match="nodes.csv:1"):
        import_murray_dir(tmp_path, 20, 1, 1)


def test_random_instance_is_seeded():
    a, b = random_instance(7, seed=5), random_instance(7, seed=5)
    assert np.array_equal(a.tau, b.tau) and a.eligible == b.eligible

import json
import math
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from spectrum_lease.cli import main, parse_scenario
from spectrum_lease.core import ScenarioError
from spectrum_lease.nash import GameParams, find_all_equilibria
from spectrum_lease.report import Table, dumps, emit_report, loads, read_report

GOLDEN = Path(__file__).parent / "golden"
REF = GOLDEN / "reference.txt"

# subcommand arguments -> golden file; outputs must match byte for byte
GOLDEN_RUNS = [
    (["validate", "--scenario", str(REF)], "validate.csv"),
    (["nash", "--scenario", str(REF), "--q1-epoch2", "70"], "nash_q70.csv"),
    (["reproduce-table1"], "table1.csv"),
    (["sweep-v", "--scenario", str(REF), "--grid", "11"], "sweep_v.csv"),
    (["sweep-gh", "--scenario", str(REF), "--decomposition", "Z1=7,8;Z4=4,5,6",
      "--x-min", "40", "--x-max", "70", "--grid", "4"], "sweep_gh.csv"),
    (["reserve", "--scenario", str(REF)], "reserve.csv"),
]


def write(tmp_path, text, name="s.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


def run(args, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main(args + ["--out", str(out)])
    return code, out


class TestScenarioFile:
    def test_reference(self):
        s, seed = parse_scenario(REF)
        assert (s.c0, s.c1, s.q1, s.q2) == (480, 1, 100, 60)
        assert (s.len_epoch1, s.len_epoch2, s.len_epoch3) == (0, 5, 3)
        assert seed is None
        assert list(s.layout.epoch2) == [4, 5, 6, 7, 8]

    def test_seed_and_tol(self, tmp_path):
        p = write(tmp_path, REF.read_text() + "tol = 1e-8\nseed = 7\n")
        s, seed = parse_scenario(p)
        assert s.tol == 1e-8 and seed == 7
        assert parse_scenario(p, tol=1e-6)[0].tol == 1e-6

    def test_missing_key(self, tmp_path):
        p = write(tmp_path, "\n".join(l for l in REF.read_text().splitlines()
                                      if not l.startswith("c1")))
        with pytest.raises(ValueError, match="missing key: c1"):
            parse_scenario(p)

    def test_non_numeric(self, tmp_path):
        p = write(tmp_path, REF.read_text().replace("q2 = 60", "q2 = sixty"))
        with pytest.raises(ValueError, match=r"line 5: q2: not a number"):
            parse_scenario(p)

    def test_non_integer_length(self, tmp_path):
        p = write(tmp_path, REF.read_text().replace("epoch2_len = 5", "epoch2_len = 2.5"))
        with pytest.raises(ValueError, match="epoch2_len"):
            parse_scenario(p)

    def test_unknown_and_duplicate(self, tmp_path):
        with pytest.raises(ValueError, match="unknown key: c2"):
            parse_scenario(write(tmp_path, REF.read_text() + "c2 = 1\n"))
        with pytest.raises(ValueError, match="duplicate key: c0"):
            parse_scenario(write(tmp_path, REF.read_text() + "c0 = 1\n"))

    def test_price_condition_names_lines(self, tmp_path):
        p = write(tmp_path, REF.read_text().replace("c0 = 480", "c0 = 100"))
        with pytest.raises(ScenarioError, match=r"c0 <= 2 c1 \(q1\+q2\).*c0 on line 2"):
            parse_scenario(p)


class TestCommands:
    @pytest.mark.parametrize("args,golden", GOLDEN_RUNS, ids=[g for _, g in GOLDEN_RUNS])
    def test_golden(self, tmp_path, args, golden):
        code, out = run(args, tmp_path)
        assert code == 0
        assert out.read_bytes() == (GOLDEN / golden).read_bytes()

    def test_deterministic(self, tmp_path):
        args = ["compare", "--scenario", str(GOLDEN / "compare.txt"), "--restarts", "4"]
        _, a = run(args, tmp_path, "a.csv")
        _, b = run(args, tmp_path, "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_nash_matches_library(self, tmp_path):
        s, _ = parse_scenario(REF)
        eqs = find_all_equilibria(GameParams(s, s.layout, 70.0, 60.0))
        t = read_report(GOLDEN / "nash_q70.csv")
        assert t.meta["count"] == len(eqs)
        assert t.meta["eq0.lambda"] == pytest.approx(eqs[0].lam, rel=1e-11)
        assert t.meta["eq0.decomposition"] == eqs[0].decomposition.label()
        expected = [eqs[0].schedule1[n] for n in (8, 7, 6, 5, 4)]
        assert t.column("d1") == pytest.approx(expected, rel=1e-11, abs=1e-12)

    def test_infeasible_decomposition_is_header_only(self, tmp_path):
        code, out = run(["nash", "--scenario", str(REF), "--q1-epoch2", "5",
                         "--decomposition", "Z1=7,8;Z2=6;Z4=4,5"], tmp_path)
        assert code == 0
        t = read_report(out)
        assert t.rows == [] and t.columns[:3] == ["equilibrium", "stage", "zone"]
        assert t.meta["requested_feasible"] is False

    def test_json_mirrors_csv(self, tmp_path):
        args = ["sweep-v", "--scenario", str(REF), "--grid", "11"]
        _, c = run(args, tmp_path, "v.csv")
        _, j = run(args + ["--format", "json"], tmp_path, "v.json")
        a, b = read_report(c), read_report(j, "json")
        assert a.columns == b.columns
        assert a.rows == b.rows
        doc = json.loads(j.read_text())
        assert set(doc) == {"meta", "columns", "rows"}

    def test_simulate_and_epoch1(self, tmp_path):
        p = write(tmp_path, REF.read_text().replace("epoch1_len = 0", "epoch1_len = 2"))
        code, out = run(["simulate", "--scenario", str(p)], tmp_path)
        assert code == 0
        t = read_report(out)
        assert t.column("kind")[0] == "offer-report"
        assert t.meta["reserve"] == 0
        code, out = run(["epoch1", "--scenario", str(p)], tmp_path, "e1.csv")
        t = read_report(out)
        assert t.column("stage") == [10, 9]
        assert t.meta["q2_epoch2"] == pytest.approx(0.0, abs=1e-9)


class TestExitCodes:
    def test_validation_failure(self, tmp_path, capsys):
        p = write(tmp_path, REF.read_text().replace("c0 = 480", "c0 = 100"))
        assert main(["validate", "--scenario", str(p)]) == 2
        assert "c0 <= 2 c1" in capsys.readouterr().err

    def test_missing_scenario(self):
        assert main(["nash"]) == 2

    def test_solver_failure(self, tmp_path):
        p = write(tmp_path, REF.read_text() + "tol = 1e-300\n")
        assert main(["nash", "--scenario", str(p), "--q1-epoch2", "77.7",
                     "--q2-epoch2", "33.3"]) == 3

    def test_unknown_subcommand_and_flag(self):
        with pytest.raises(SystemExit) as e:
            main(["polyblock"])
        assert e.value.code == 2
        with pytest.raises(SystemExit) as e:
            main(["validate", "--scenario", str(REF), "--verbose"])
        assert e.value.code == 2

    def test_bad_bool(self):
        with pytest.raises(SystemExit):
            main(["nash", "--scenario", str(REF), "--pruned", "maybe"])

    def test_unwritable_path(self, tmp_path):
        assert main(["validate", "--scenario", str(REF),
                     "--out", str(tmp_path / "missing" / "x.csv")]) == 2


cells = st.one_of(st.integers(-10 ** 9, 10 ** 9), st.booleans(),
                  st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1)
                  .filter(lambda t: t.strip() == t and t not in ("true", "false", "inf", "-inf")
                          and _is_text(t)),
                  st.floats(allow_nan=False, allow_infinity=False).map(lambda v: float("%.12g" % v)))


def _is_text(t):
    try:
        float(t)
        return False
    except ValueError:
        return True


@given(st.lists(st.lists(cells, min_size=3, max_size=3), max_size=5),
       st.dictionaries(st.sampled_from(["a", "b.c", "x_star"]), cells, max_size=3))
def test_round_trip(rows, meta):
    t = Table(["c1", "c2", "c3"], rows, meta)
    for fmt in ("csv", "json"):
        back = loads(dumps(t, fmt), fmt)
        assert back.columns == t.columns
        assert len(back.rows) == len(t.rows)
        for r, s in zip(back.rows, t.rows):
            for a, b in zip(r, s):
                assert a == b or (isinstance(b, float) and math.isclose(a, b, rel_tol=1e-11))
        assert back.meta.keys() == t.meta.keys()


def test_empty_table_is_header_only():
    assert dumps(Table(["a", "b"])) == "a,b\n"


def test_emit_to_bad_path(tmp_path):
    with pytest.raises(OSError):
        emit_report(Table(["a"]), tmp_path / "nope" / "x.csv")

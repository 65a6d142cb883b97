import json

import numpy as np
import pytest

from clw import nets
from clw.cli import main
from clw.pl import PLFunc
from clw.signature import Signature, Symbol
from clw.structures import FiniteStructure


@pytest.fixture
def files(tmp_path):
    S = nets.build_net(nets.interval(), 4)
    S.save(tmp_path / "line.json")
    (tmp_path / "sig.json").write_text(json.dumps(S.signature.to_json()))
    (tmp_path / "self.clf").write_text("sup x . d(x,x)\n")
    (tmp_path / "half.clf").write_text("# distance to one half\nd(x, y)\n")
    (tmp_path / "bad.clf").write_text("sup x . P(x, x)\n")
    return tmp_path


def test_eval_prints_value(files, capsys):
    assert main(["eval", str(files / "line.json"), str(files / "self.clf")]) == 0
    assert capsys.readouterr().out.strip() == "0"


def test_eval_with_let_and_witness(files, capsys):
    assert main(["eval", str(files / "line.json"), str(files / "half.clf"),
                 "--let", "x=0", "--let", "y=0.75"]) == 0
    assert capsys.readouterr().out.strip() == "0.75"
    assert main(["eval", str(files / "line.json"), str(files / "self.clf"), "--witness"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["value"] == 0 and out["witness"]["op"] == "sup"


def test_eval_engines_agree(files, capsys):
    outs = []
    for extra in ([], ["--engine", "dense"], ["--no-pruning"], ["--parallel"]):
        assert main(["eval", str(files / "line.json"), str(files / "self.clf")] + extra) == 0
        outs.append(capsys.readouterr().out)
    assert len(set(outs)) == 1


def test_check(files, capsys):
    assert main(["check", str(files / "self.clf"), "--sig", str(files / "sig.json")]) == 0
    assert json.loads(capsys.readouterr().out)["free_vars"] == []
    assert main(["check", str(files / "bad.clf"), "--sig", str(files / "sig.json")]) == 1
    assert "arity" in capsys.readouterr().err


def test_usage_errors(files, capsys):
    assert main(["eval", str(files / "missing.json"), str(files / "self.clf")]) == 2
    assert main(["eval", str(files / "line.json"), str(files / "self.clf"), "--cap-atoms", "0"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "nosuch"])
    assert exc.value.code == 2


def test_invalid_structure_fails(files, capsys):
    data = json.loads((files / "line.json").read_text())
    data["dist"][0][1] = 0.9
    (files / "asym.json").write_text(json.dumps(data))
    assert main(["eval", str(files / "asym.json"), str(files / "self.clf")]) == 1
    assert "symmetry" in capsys.readouterr().err


def test_atom_cap_exit(files):
    assert main(["eval", str(files / "line.json"), str(files / "self.clf"), "--cap-atoms", "2"]) == 1


def test_net_and_discretize_byte_identical(files):
    a, b = files / "a.json", files / "b.json"
    assert main(["discretize", "interval", "--m", "8", "--out", str(a)]) == 0
    assert main(["discretize", "interval", "--m", "8", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    prov = json.loads((files / "a.json.provenance.json").read_text())
    assert prov["mesh"] == 1 / 16 and prov["compliance"] == "almost-structure"
    S = FiniteStructure.load(a)
    assert S.size == 9 and "h" in S.functions
    assert main(["net", "circle", "--m", "8", "--out", str(files / "c.json")]) == 0
    assert FiniteStructure.load(files / "c.json").functions == {}


def test_quotient_two_clusters(files, capsys):
    sig = Signature("s", (Symbol("P", 1, PLFunc.identity()),))
    d = np.full((4, 4), 0.95)
    d[0, 1] = d[1, 0] = d[2, 3] = d[3, 2] = 0.05
    np.fill_diagonal(d, 0)
    S = FiniteStructure(sig, ["a", "b", "c", "d"], d, {"P": np.array([0, 0.02, 0.9, 0.95])})
    S.save(files / "two.json")
    assert main(["quotient", "--in", str(files / "two.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert len(out["points"]) == 2
    d[0, 2] = d[2, 0] = 0.5
    S.with_tables(dist=d).save(files / "mid.json")
    assert main(["quotient", "--in", str(files / "mid.json")]) == 1


def test_transform(files, capsys):
    (files / "cl.txt").write_text("forall x . exists y . ~(x = y)\n")
    assert main(["transform", "--in", str(files / "cl.txt")]) == 0
    assert capsys.readouterr().out.strip() == "neg(inf x . neg(inf y . neg(d(x, y))))"


def test_experiment_outputs(files, capsys):
    assert main(["experiment", "apaa", "--m", "7", "--n", "2"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert abs(rep["values"]["witness"] - 1 / 7) < 1e-12
    out = files / "conv.csv"
    assert main(["experiment", "convergence", "--space", "circle", "--ms", "8,16",
                 "--format", "csv", "--out", str(out)]) == 0
    assert out.read_text().startswith("sentence,m,value,reference,error\nS,8,")
    assert main(["experiment", "atomless", "--m", "4", "--format", "text"]) == 0
    assert "value = 0.25" in capsys.readouterr().out

import csv
import io
import json
from fractions import Fraction as F

import pytest

from teamocc.coordination import coordinated_forward
from teamocc.errors import PolicyFormatError
from teamocc.occupancy import forward_weights
from teamocc.policies import FiniteMixture, psi_lift
from teamocc.sampling import (random_coordination_policy, random_mixture, random_product_mixture, random_profile,
                              rng_for)
from teamocc.serialize import (load_policy, measure_to_csv, policy_class, policy_from_dict, policy_to_dict,
                               rational_json, save_policy)


def samples(s):
    rng = rng_for("ser", s.model.n_states)
    pure = random_profile(rng, s.model, s.index, pure=True)
    coord = random_coordination_policy(rng, s.system, s.T)
    return {
        "pure_dec": pure,
        "behavioral_dec": random_profile(rng, s.model, s.index),
        "mixture_dec": random_mixture(rng, s.model, s.index, atoms=2),
        "product_mixture": random_product_mixture(rng, s.model, s.index, atoms=2, pure=False),
        "pure_coord": psi_lift(pure, s.pindex, s.index),
        "behavioral_coord": coord,
        "mixture_coord": FiniteMixture(((F(1, 3), random_coordination_policy(rng, s.system, s.T, pure=True)),
                                        (F(2, 3), random_coordination_policy(rng, s.system, s.T, pure=True)))),
    }


@pytest.mark.parametrize("name", ["m_unit", "m_reveal"])
def test_round_trip_every_class(name, setup, tmp_path):
    s = setup(name, 2)
    for cls, pol in samples(s).items():
        assert policy_class(pol) == cls
        path = tmp_path / f"{cls}.json"
        save_policy(pol, path, s.index, s.pindex)
        back = load_policy(path, s.model)
        assert policy_class(back) == cls
        if cls.endswith("coord"):
            a = coordinated_forward(s.model, s.pindex, pol, 2)
            b = coordinated_forward(s.model, s.pindex, back, 2)
        else:
            a, b = forward_weights(s.model, pol, 2), forward_weights(s.model, back, 2)
        assert a.same_as(b)
        # second save is byte-identical
        path2 = tmp_path / f"{cls}-2.json"
        save_policy(back, path2, s.index, s.pindex)
        assert path.read_text() == path2.read_text()


def test_format_errors(setup):
    s = setup("m_unit", 1)
    with pytest.raises(PolicyFormatError):
        policy_from_dict({"class": "nope", "horizon": 1}, s.model)
    good = policy_to_dict(samples(s)["behavioral_dec"], s.index)
    bad = json.loads(json.dumps(good))
    bad["class"] = "pure_dec"
    with pytest.raises(PolicyFormatError):
        policy_from_dict(bad, s.model)
    bad = json.loads(json.dumps(good))
    bad["agents"][0][0]["dist"] = ["1/2", "1/4"]
    with pytest.raises(PolicyFormatError):
        policy_from_dict(bad, s.model)
    bad = json.loads(json.dumps(good))
    bad["agents"][0][0]["private"] = 7
    with pytest.raises(PolicyFormatError):
        policy_from_dict(bad, s.model)


def test_csv_export(setup):
    s = setup("m_match", 1)
    rho = forward_weights(s.model, samples(s)["behavioral_dec"], 1)
    rows = list(csv.reader(io.StringIO(measure_to_csv(rho, s.model))))
    assert rows[0] == ["t", "history", "action", "weight", "weight_float"]
    assert len(rows) - 1 == len(rho.weights)
    assert sum(F(r[3]) for r in rows[1:]) == 1
    for r in rows[1:]:
        assert abs(float(r[4]) - float(F(r[3]))) < 1e-15
    q = coordinated_forward(s.model, s.pindex, samples(s)["behavioral_coord"], 1)
    rows = list(csv.reader(io.StringIO(measure_to_csv(q, s.model, s.pindex))))
    assert all(r[2].startswith("G") for r in rows[1:])


def test_rational_json():
    assert rational_json(F(3, 8)) == {"exact": "3/8", "float": 0.375}
    assert rational_json(2) == {"exact": "2", "float": 2.0}

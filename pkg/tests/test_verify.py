import copy

import numpy as np

from pwapid.presets import cstr_model
from pwapid.sysmodel import LtiModel
from pwapid.verify import SUITES, model_matches, run_suites


def test_all_suites_pass_on_plain_scheme(controllers):
    results = run_suites(controllers("I").law, samples=2000, seed=7)
    assert [r.name for r in results] == list(SUITES)
    for r in results:
        assert r.passed, (r.name, r.detail)


def test_tampered_law_fails_oracle(controllers):
    law = copy.deepcopy(controllers("I").law)
    law.regions[1].g = law.regions[1].g + 0.1
    (res,) = run_suites(law, samples=2000, seed=7, suites=("oracle",))
    assert not res.passed


def test_model_match(controllers):
    law = controllers("I").law
    assert model_matches(law, cstr_model())
    m = cstr_model()
    other = LtiModel(0.9 * m.A, m.B, m.C, m.Cv, m.constraints, m.frame)
    assert not model_matches(law, other)

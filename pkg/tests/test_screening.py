import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import funnel_survivors_conjunction
from conftest import FIXTURES
from mof_forge.errors import MissingDescriptor, NoSurrogate
from mof_forge.screening import (FilterStage, ScreeningConfig,
                                 configure_funnel, load_descriptor_table,
                                 run_funnel, shortlist_vs_exhaustive)


def synthetic_db(n=50, seed=1, blocked_ids=()):
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        sid = f"SYN-{i:03d}"
        rows.append({
            "structure_id": sid,
            "valid": rng.random() > 0.05,
            "atom_count": rng.randint(40, 1200),
            "pld": round(rng.uniform(2.0, 12.0), 3)
            if sid not in blocked_ids else 2.5,
            "lcd": round(rng.uniform(4.0, 20.0), 3),
            "henry_CH4": 10 ** rng.uniform(-8, -5),
        })
    return rows


def test_configure_ch4_gcmc_funnel():
    config = configure_funnel("ch4-uptake", "gcmc", evidence=[])
    kinds = [s.kind for s in config.stages]
    assert kinds == ["validity", "atom_count", "accessibility",
                     "descriptor_rank"]
    assert config.stages[1].params["max_atoms"] == 1000
    assert config.stages[2].params["probe_diameter_A"] == 3.8
    assert config.stages[3].params == {"rank_descriptor": "henry_CH4",
                                       "top_n": 1000}


def test_dft_downstream_tightens_atom_limit():
    config = configure_funnel("co2-binding-energy", "dft", evidence=[])
    atom_stage = next(s for s in config.stages if s.kind == "atom_count")
    assert atom_stage.params["max_atoms"] == 300


def test_unknown_objective_has_no_surrogate():
    with pytest.raises(NoSurrogate):
        configure_funnel("tensile-strength", "gcmc", evidence=[])


def test_rank_stage_must_be_final_and_unique():
    with pytest.raises(ValueError):
        ScreeningConfig(objective="x", downstream_workflow="gcmc", stages=(
            FilterStage("r", "descriptor_rank",
                        {"rank_descriptor": "henry_CH4", "top_n": 5}),
            FilterStage("v", "validity"),
        ))


def test_packaged_fixture_reproduces_documented_counts():
    table = load_descriptor_table(FIXTURES / "screening" / "descriptors.tsv")
    report = run_funnel(table, configure_funnel("ch4-uptake", "gcmc", []))
    assert [(n_in, n_out) for _s, n_in, n_out in report.stages] == \
        [(3786, 3776), (3776, 3771), (3771, 1878), (1878, 1000)]
    assert len(report.shortlist) == 1000


def test_empty_db():
    report = run_funnel([], configure_funnel("ch4-uptake", "gcmc", []))
    assert [(n_in, n_out) for _s, n_in, n_out in report.stages] == \
        [(0, 0), (0, 0), (0, 0), (0, 0)]
    assert report.shortlist == []
    assert report.survivors == []


def test_survivors_match_conjunction_oracle():
    db = synthetic_db()
    config = configure_funnel("ch4-uptake", "gcmc", [])
    report = run_funnel(db, config)
    expected = funnel_survivors_conjunction(db, max_atoms=1000, probe=3.8)
    assert set(report.survivors) == expected


def test_counts_monotone_and_chained():
    db = synthetic_db(n=200, seed=2)
    report = run_funnel(db, configure_funnel("ch4-uptake", "gcmc", []))
    for (_, n_in, n_out), (_, next_in, _next_out) in zip(report.stages,
                                                         report.stages[1:]):
        assert n_out <= n_in
        assert n_out == next_in


def test_missing_descriptor_names_row_and_field():
    db = synthetic_db(n=5, seed=3)
    db[2]["valid"] = True
    db[2]["atom_count"] = 100  # must survive to the accessibility stage
    del db[2]["pld"]
    with pytest.raises(MissingDescriptor) as excinfo:
        run_funnel(db, configure_funnel("ch4-uptake", "gcmc", []))
    assert excinfo.value.structure_id == "SYN-002"
    assert excinfo.value.field == "pld"


@settings(max_examples=25)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_shortlist_invariant_under_row_permutation(seed):
    db = synthetic_db(n=60, seed=4)
    rng = random.Random(seed)
    shuffled = list(db)
    rng.shuffle(shuffled)
    config = configure_funnel("ch4-uptake", "gcmc", [], top_n=10)
    assert run_funnel(db, config).shortlist == \
        run_funnel(shuffled, config).shortlist


def test_survivor_set_independent_of_stage_order():
    db = synthetic_db(n=80, seed=5)
    base = configure_funnel("ch4-uptake", "gcmc", [])
    reordered = ScreeningConfig(
        objective=base.objective, downstream_workflow=base.downstream_workflow,
        stages=(base.stages[2], base.stages[0], base.stages[1],
                base.stages[3]))
    assert set(run_funnel(db, base).survivors) == \
        set(run_funnel(db, reordered).survivors)


# --- shortlist vs exhaustive -----------------------------------------------------------------

def monotone_db(n=50):
    """Top-henry rows are all valid, small, and accessible, so a monotone
    evaluator preserves the top tier through the funnel."""
    rows = []
    for i in range(n):
        rows.append({
            "structure_id": f"MONO-{i:03d}",
            "valid": True,
            "atom_count": 100,
            "pld": 5.0,
            "lcd": 9.0,
            "henry_CH4": 1e-6 * (n - i),
        })
    return rows


def test_monotone_surrogate_preserves_top_ten():
    db = monotone_db()
    config = configure_funnel("ch4-uptake", "gcmc", [], top_n=20)
    report = shortlist_vs_exhaustive(
        db, config, evaluator=lambda row: 2.0 * row["henry_CH4"] ** 0.9)
    assert report.overlap == 10


def test_evaluator_equal_to_surrogate_trivially_overlaps():
    db = monotone_db()
    config = configure_funnel("ch4-uptake", "gcmc", [], top_n=20)
    report = shortlist_vs_exhaustive(db, config,
                                     evaluator=lambda row: row["henry_CH4"])
    assert report.overlap == 10


def test_geometry_blocked_candidate_is_reported_not_hidden():
    db = monotone_db()
    db[0]["pld"] = 2.5  # best-by-evaluator row cannot pass accessibility
    config = configure_funnel("ch4-uptake", "gcmc", [], top_n=20)
    report = shortlist_vs_exhaustive(db, config,
                                     evaluator=lambda row: row["henry_CH4"])
    assert report.overlap == 9
    assert "MONO-000" in report.exhaustive_top
    assert "MONO-000" not in report.funnel_top

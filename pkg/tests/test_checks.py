"""Check registry and check-runner behavior shared by the scenario CLI."""

import math
import re

import numpy as np
import pytest

from koopsets.checks import REGISTRY, list_checks_text
from koopsets.cli import build_context, load_scenario

EXPECTED_ORDER = [
    "flow_identity",
    "flow_oracle",
    "flow_estimates",
    "continuity_in_control",
    "semigroup",
    "koopman_algebra",
    "generator_koopman",
    "generator_convexification",
    "transport_inclusion",
    "duality",
    "generator_perron",
    "adjoint_inequality",
    "spectral_eigen",
    "spectral_mapping",
    "converse_probe",
    "eigen_products",
]

MODULE_TAGS = {"flows", "koopman", "liouville", "perron", "spectral"}


def test_registry_names_and_order():
    assert list(REGISTRY) == EXPECTED_ORDER
    assert len(set(REGISTRY)) == len(REGISTRY)


def test_registry_specs_well_formed():
    for name, spec in REGISTRY.items():
        assert spec.name == name
        assert spec.module in MODULE_TAGS
        assert spec.description.strip()
        assert spec.prop.strip()
        assert spec.default_tolerance > 0
        assert callable(spec.runner)


def test_registry_default_tolerances():
    assert REGISTRY["semigroup"].default_tolerance == 1e-6
    assert REGISTRY["koopman_algebra"].default_tolerance == 1e-12
    assert REGISTRY["duality"].default_tolerance == 1e-12
    assert REGISTRY["spectral_mapping"].default_tolerance == 1e-6
    # Rate-window checks report a normalized defect compared against 1.
    for name in ("generator_koopman", "generator_convexification",
                 "generator_perron", "converse_probe"):
        assert REGISTRY[name].default_tolerance == 1.0


def test_list_checks_text_format():
    text = list_checks_text()
    lines = text.splitlines()
    assert len(lines) == len(REGISTRY)
    for required in ("semigroup", "generator_koopman", "duality",
                     "spectral_mapping"):
        assert any(line.startswith(required + " ") for line in lines)
    pattern = re.compile(
        r"^(\S+) +\[(flows|koopman|liouville|perron|spectral)\]  .+"
        r"\(property: .+\)$")
    bracket_cols = set()
    for line, name in zip(lines, REGISTRY):
        match = pattern.match(line)
        assert match is not None, line
        assert match.group(1) == name
        assert match.group(2) == REGISTRY[name].module
        bracket_cols.add(line.index(" ["))
    assert len(bracket_cols) == 1  # aligned module column


def _context(path, **overrides):
    return build_context(load_scenario(path), **overrides)


def test_context_per_check_seeds_are_stable_and_distinct():
    ctx_a = _context("scenarios/zero_field_all.toml")
    ctx_b = _context("scenarios/zero_field_all.toml")
    seeds = [ctx_a.int_seed(name) for name in REGISTRY]
    assert seeds == [ctx_b.int_seed(name) for name in REGISTRY]
    assert len(set(seeds)) == len(seeds)
    draw_a = ctx_a.rng("duality").standard_normal(8)
    draw_b = ctx_b.rng("duality").standard_normal(8)
    assert np.array_equal(draw_a, draw_b)
    ctx_c = build_context(load_scenario("scenarios/zero_field_all.toml"),
                          seed=1)
    assert not np.array_equal(draw_a, ctx_c.rng("duality").standard_normal(8))


@pytest.fixture(scope="module")
def zero_outcomes():
    ctx = _context("scenarios/zero_field_all.toml")
    return {name: REGISTRY[name].runner(ctx) for name in REGISTRY}


def test_zero_field_all_checks_pass_default_tolerances(zero_outcomes):
    for name, outcome in zero_outcomes.items():
        assert outcome.worst_defect < REGISTRY[name].default_tolerance, name


def test_zero_field_defects_exactly_zero(zero_outcomes):
    for name, outcome in zero_outcomes.items():
        if name == "adjoint_inequality":
            continue
        assert outcome.worst_defect == 0.0, name


def test_zero_field_adjoint_margin_artifact_tiny(zero_outcomes):
    defect = zero_outcomes["adjoint_inequality"].worst_defect
    assert 0.0 <= defect <= 1e-9


def test_outcome_csv_tables_consistent(zero_outcomes):
    for name, outcome in zero_outcomes.items():
        assert isinstance(outcome.worst_defect, float)
        assert math.isfinite(outcome.worst_defect)
        assert outcome.worst_defect >= 0.0
        header = outcome.csv_header
        assert isinstance(header, str) and header
        assert "\n" not in header
        assert len(outcome.csv_rows) >= 1, name
        width = header.count(",")
        for row in outcome.csv_rows:
            assert isinstance(row, str)
            assert row.count(",") == width, (name, row)


def test_scalar_exact_identities_zero_defect():
    ctx = _context("scenarios/scalar_affine_full.toml", step=1e-2)
    for name in ("semigroup", "koopman_algebra", "duality"):
        outcome = REGISTRY[name].runner(ctx)
        assert outcome.worst_defect == 0.0, name

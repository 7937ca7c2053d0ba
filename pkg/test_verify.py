"""
Tests for the property verification suite.
"""
import json

import pytest


def test_verify_config_validation():
    """Bad tolerances, depths and group names are rejected."""
    from verify import VerifyConfig

    with pytest.raises(ValueError, match="tolerance"):
        VerifyConfig(lattice_path="l.json", tolerance=0)
    with pytest.raises(ValueError, match="depth"):
        VerifyConfig(lattice_path="l.json", depth=0)
    with pytest.raises(ValueError, match="unknown property groups: spectra"):
        VerifyConfig(lattice_path="l.json", groups=['shifts', 'spectra'])


def test_full_suite_passes(square3):
    """Every property holds on a radius-3 square patch at the default tolerance."""
    from lattice import lattice_hash
    from verify import GROUPS, VerifyConfig, verify_suite

    report = verify_suite(VerifyConfig(lattice_path=""), square3)
    assert report.ok, report.summary()
    assert report.lattice_hash == lattice_hash(square3)
    assert {r.group for r in report.results} == set(GROUPS)


def test_rhombic_suite_passes(rhombic3):
    from verify import VerifyConfig, verify_suite

    cfg = VerifyConfig(lattice_path="", groups=['analyticity', 'eigen', 'paths', 'realization'])
    report = verify_suite(cfg, rhombic3)
    assert report.ok, report.summary()


def test_thresholds_scale_with_tolerance(square3):
    """A tighter tolerance tightens every threshold by the same factor."""
    from verify import VerifyConfig, verify_suite

    loose = verify_suite(VerifyConfig(lattice_path="", groups=['shifts']), square3)
    tight = verify_suite(VerifyConfig(lattice_path="", tolerance=1e-30, groups=['shifts']), square3)
    assert not tight.ok
    for a, b in zip(loose.results, tight.results):
        assert a.name == b.name
        assert b.threshold == pytest.approx(a.threshold * 1e-21)


def test_report_json(square3):
    """The JSON report is sorted and reproducible for a fixed seed."""
    from verify import VerifyConfig, verify_suite

    cfg = VerifyConfig(lattice_path="", seed=3, groups=['tau'])
    first = verify_suite(cfg, square3).to_json()
    second = verify_suite(cfg, square3).to_json()
    assert first == second
    data = json.loads(first)
    assert list(data) == sorted(data)
    assert data['seed'] == 3
    assert all(p['passed'] for p in data['properties'])


def test_report_summary(square3):
    from verify import VerifyConfig, verify_suite

    report = verify_suite(VerifyConfig(lattice_path="", groups=['eigen']), square3)
    lines = report.summary().splitlines()
    assert lines[-1] == f"{len(report.results)}/{len(report.results)} properties passed"
    assert all(line.startswith('PASS') for line in lines[:-1])


def test_suite_records_errors(square3):
    """A property that raises is reported as failed with the error message."""
    from errors import ConsistencyError
    from verify import VerifyConfig, VerifySuite

    suite = VerifySuite(VerifyConfig(lattice_path=""), square3)

    def broken():
        raise ConsistencyError("edge relation violated")

    suite._group = 'shifts'
    suite.check("broken property", 1e-9, broken)
    result = suite.results[-1]
    assert not result.passed
    assert result.residual is None
    assert "ConsistencyError" in result.detail


if __name__ == '__main__':
    pytest.main([__file__, '-v'])

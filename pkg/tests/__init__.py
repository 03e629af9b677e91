"""
Test Suite for Moran Lab

Test Structure:
- test_moran_system.py: sequence rules, system validation, dimension reports
- test_mixed_radix.py: index words
- test_integer_moran.py: integer Moran sets and the separation condition
- test_measure_engine.py: atomic measures, Fourier transforms, zero sets
- test_digit_thinning.py: thinned digit counts and the index set
- test_spectrum_factory.py: tree mappings and spectrum families
- test_dimension_lab.py: window counts, Beurling and entropy estimates
- test_spectrum_verifier.py: orthogonality, unitarity, completeness, separation
- test_config_loader.py / test_result_writer.py / test_moran_lab.py: runs end to end
- test_properties.py: hypothesis property tests

Running Tests:
    pytest                    # Run all tests
    pytest -m "not slow"      # Skip acceptance-size runs
    pytest -m property        # Only property tests

Markers:
    @pytest.mark.unit         - Fast, isolated unit tests
    @pytest.mark.integration  - Runs through the controller and writes artifacts
    @pytest.mark.slow         - Acceptance-size runs
    @pytest.mark.property     - Hypothesis property tests
"""

__version__ = "1.0.0"

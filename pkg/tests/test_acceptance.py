"""End-to-end checks of every library capability at published scale.

Each test runs one registry experiment with its default parameters and
seed — the same configuration a user gets from ``sdelab run`` with a
bare config file — and asserts the numerical target at its stated
tolerance.  The Monte Carlo exit problems also assert their runtime
budgets.  Everything here is deterministic: the experiments draw from
seeded streams, so these are regression gates, not flaky statistics.
"""

import math
import time

from sdelab.experiments import execute

OU_LEVEL_CROSSING_COST = 1.1565176427496657  # e / (2 sinh 1)


def timed(name):
    start = time.perf_counter()
    outcome = execute(name)
    return outcome, time.perf_counter() - start


def test_planar_brownian_ball_exit_time():
    outcome, elapsed = timed("exit-ball-2d")
    s = outcome.summary
    assert abs(s["mean_exit_time"] - 0.5) <= 0.03
    assert s["fraction_censored"] == 0.0
    assert elapsed < 60.0


def test_three_dimensional_transience_hitting_frequency():
    outcome, elapsed = timed("shell-hitting-3d")
    assert abs(outcome.summary["hit_probability"] - 0.5) <= 0.03
    assert elapsed < 120.0


def test_feynman_kac_laplace_transforms_match_closed_forms():
    outcome = execute("feynman-kac-interval")
    s = outcome.summary
    assert s["max_abs_z_laplace"] <= 3.0
    assert abs(s["conditional_mean_z"]) <= 3.0


def test_occupation_fractions_follow_the_arcsine_law():
    outcome = execute("arcsine-law")
    assert outcome.summary["ks_statistic"] < 0.03


def test_ito_integral_converges_at_the_strong_rate():
    outcome = execute("ito-isometry")
    s = outcome.summary
    for ratio in s["rms_ratios"]:
        assert abs(ratio - math.sqrt(2.0)) <= 0.15
    assert abs(s["isometry_z"]) <= 5.0


def test_fokker_planck_preserves_and_attracts_the_gibbs_density():
    outcome = execute("fp-stationarity")
    s = outcome.summary
    assert s["stationary_l1_drift"] < 1e-4
    assert s["uniform_relaxation_l1"] < 1e-3


def test_drift_minorisation_certificates_and_weighted_contraction():
    outcome = execute("hm-ou-kernel")
    s = outcome.summary
    assert s["gamma_rel_error"] <= 0.05
    assert s["d_rel_error"] <= 0.05
    assert s["alpha"] > 0.0
    assert s["max_ratio"] <= s["alpha_bar"] + 1e-9
    assert outcome.flags == ()


def test_projective_contraction_and_perron_eigendata():
    outcome = execute("birkhoff-jentzsch")
    s = outcome.summary
    assert abs(s["projective_diameter"] - math.log(4.0)) <= 1e-9
    assert s["max_sampled_ratio"] <= 1.0 / 3.0 + 1e-9
    assert s["lambda0"] < 1.0
    assert s["residual_right"] < 1e-8
    assert s["residual_left"] < 1e-8
    assert s["observed_rate"] <= s["rate_bound"] + 1e-9


def test_minimum_action_matches_the_level_crossing_cost():
    outcome = execute("ou-minimum-action")
    s = outcome.summary
    assert abs(s["action"] - OU_LEVEL_CROSSING_COST) <= 1e-3
    assert abs(s["free_action"] - 0.125) <= 1e-4
    assert outcome.flags == ()


def test_double_well_quasipotential_doubles_the_barrier():
    outcome = execute("quasipotential-double-well")
    assert abs(outcome.summary["value"] - 0.5) <= 0.02 * 0.5
    assert outcome.flags == ()


def test_exit_times_scale_toward_the_arrhenius_barrier():
    outcome = execute("arrhenius-well")
    s = outcome.summary
    assert s["v_bar"] == 1.0
    assert s["monotone"]
    assert abs(s["value_at_smallest_eps"] - 1.0) <= 0.15


def test_mean_transition_time_tracks_the_kramers_prefactor():
    outcome = execute("eyring-kramers")
    s = outcome.summary
    assert 0.5 <= s["ratio"] <= 2.0
    assert s["fraction_censored"] == 0.0


def test_every_certificate_survives_an_entrywise_recheck():
    outcome = execute("certificate-soundness")
    s = outcome.summary
    assert s["drift_violations"] == 0
    assert s["minorisation_violations"] == 0
    assert s["cone_violations"] == 0

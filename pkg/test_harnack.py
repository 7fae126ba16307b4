import unittest

import numpy as np
import sympy as sp

import diffpoly_engine as dp
import harnack_engine as hk
from harnack_engine import AnsatzParams, PhiAnsatz, ParameterError, HOLDS, FAILS, VACUOUS


def random_pair(rng):
    """Random rationals with a > b > 0."""
    a = sp.Rational(int(rng.integers(1, 50)), int(rng.integers(1, 20)))
    b = a * sp.Rational(int(rng.integers(1, 99)), 100)
    return a, b


class TestRemainder(unittest.TestCase):

    def test_general_remainder_matches_closed_form(self):
        params = AnsatzParams.symbolic()
        self.assertEqual(hk.symbolic_remainder(), hk.expected_remainder(params))

    def test_numeric_remainder(self):
        params = AnsatzParams(2, 1, 3)
        self.assertEqual(hk.general_remainder(params), hk.expected_remainder(params))

    def test_serialized_remainder_round_trip(self):
        text = dp.serialize(hk.symbolic_remainder())
        self.assertEqual(dp.parse(text, hk.PARAM_SYMBOLS), hk.symbolic_remainder())


class TestQuadForm(unittest.TestCase):

    def test_symbolic_coefficients(self):
        params = AnsatzParams.symbolic()
        qf = hk.symbolic_quadform()
        expected = hk.expected_quadform(params)
        for name, value in qf.coefficients().items():
            self.assertEqual(sp.simplify(value - expected[name]), 0, name)
        self.assertEqual(qf.residual, hk.expected_residual())

    def test_curvature_choice(self):
        params = AnsatzParams(1, 0, 1)
        qf = hk.critical_substitute(hk.general_remainder(params), params)
        self.assertEqual(qf.coefficients(),
                         {"cYY": 0, "cXX": 0, "cXY": 0, "cPhiX": 0, "cPhiY": 0, "cPhiPhi": 2})

    def test_a_equals_b_kills_phi_square(self):
        params = AnsatzParams(1, 1, 5)
        qf = hk.critical_substitute(hk.general_remainder(params), params)
        self.assertEqual(qf.cPhiPhi, 0)

    def test_a_zero_rejected(self):
        params = AnsatzParams(0, 1, 1)
        with self.assertRaises(ParameterError):
            hk.critical_substitute(hk.general_remainder(params), params)

    def test_unsubstitute_round_trip(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            a = sp.Rational(int(rng.integers(1, 30)), int(rng.integers(1, 7)))
            b = sp.Rational(int(rng.integers(-20, 20)), int(rng.integers(1, 7)))
            c = sp.Rational(int(rng.integers(-20, 20)), int(rng.integers(1, 7)))
            params = AnsatzParams(a, b, c)
            remainder = hk.general_remainder(params)
            qf = hk.critical_substitute(remainder, params)
            self.assertEqual(hk.unsubstitute(qf, params), remainder)


class TestConditions(unittest.TestCase):

    def test_bounds(self):
        a, b = hk.A_SYM, hk.B_SYM
        bounds = hk.condition_bounds()
        self.assertEqual(sp.simplify(bounds.lower - a ** 2 / (a - b)), 0)
        self.assertEqual(
            sp.simplify(bounds.upper - (3 * a + b) * a ** 2 / (3 * a ** 2 - 2 * a * b + 2 * b ** 2)), 0)

    def test_interval_2_1_is_empty(self):
        lower, upper = hk.c_interval(2, 1)
        self.assertEqual(lower, 4)
        self.assertEqual(upper, sp.Rational(14, 5))
        self.assertTrue(hk.interval_is_empty(2, 1))

    def test_report_2_1_3(self):
        params = AnsatzParams(2, 1, 3)
        qf = hk.critical_substitute(hk.general_remainder(params), params)
        report = hk.derive_conditions(qf, params)
        self.assertFalse(report.feasible)
        failed = [cond.name for cond in report.failed()]
        self.assertIn("(iv) phi X term", failed)
        self.assertIn("(v) c interval", failed)

    def test_report_a_equals_b(self):
        params = AnsatzParams(1, 1, 1)
        qf = hk.critical_substitute(hk.general_remainder(params), params)
        report = hk.derive_conditions(qf, params)
        self.assertFalse(report.feasible)
        statuses = {cond.name: cond.status for cond in report.conditions}
        self.assertEqual(statuses["(i) a > b >= 0"], FAILS)
        self.assertEqual(statuses["(v) c interval"], VACUOUS)

    def test_report_curvature_choice_feasible(self):
        params = AnsatzParams(1, 0, 1)
        qf = hk.critical_substitute(hk.general_remainder(params), params)
        report = hk.derive_conditions(qf, params)
        self.assertTrue(report.feasible)
        self.assertTrue(all(cond.status == HOLDS for cond in report.conditions))
        self.assertEqual(list(report.to_frame().columns), ["name", "inequality", "status", "detail"])

    def test_symbolic_quadform_accepted(self):
        params = AnsatzParams(3, 0, 3)
        report = hk.derive_conditions(hk.symbolic_quadform(), params)
        self.assertTrue(report.feasible)

    def test_symbolic_params_rejected(self):
        with self.assertRaises(ParameterError):
            hk.derive_conditions(hk.symbolic_quadform(), AnsatzParams.symbolic())

    def test_interval_empty_for_random_rationals(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            a, b = random_pair(rng)
            self.assertTrue(hk.interval_is_empty(a, b), (a, b))

    def test_feasibility_invariant_under_scaling(self):
        rng = np.random.default_rng(3)
        for params, _ in hk.search_samples(seed=9, count=15):
            factor = sp.Rational(int(rng.integers(1, 9)), int(rng.integers(1, 9)))
            scaled = params.scaled(factor)
            original = hk.derive_conditions(hk.critical_substitute(hk.general_remainder(params), params), params)
            rescaled = hk.derive_conditions(hk.critical_substitute(hk.general_remainder(scaled), scaled), scaled)
            self.assertEqual(original.feasible, rescaled.feasible)


class TestPhiConditions(unittest.TestCase):

    def test_b_zero_feasible(self):
        report = hk.phi_conditions(AnsatzParams(1, 0, 1), PhiAnsatz("51/100", 0))
        self.assertTrue(report.feasible)

    def test_b_zero_needs_strict_alpha(self):
        report = hk.phi_conditions(AnsatzParams(1, 0, 1), PhiAnsatz("1/2", 0))
        self.assertFalse(report.feasible)
        self.assertIn("strict", report.failed()[0].detail)

    def test_b_zero_beta_positive(self):
        report = hk.phi_conditions(AnsatzParams(1, 0, 1), PhiAnsatz(1, 1))
        self.assertFalse(report.feasible)
        self.assertEqual(report.failed()[0].detail, "B undefined at b=0")

    def test_b_positive(self):
        params = AnsatzParams(2, 1, 0)
        A, B = hk.coefficient_A(params), hk.coefficient_B(params)
        self.assertEqual(A, sp.Rational(1, 2))
        self.assertEqual(B, 1)
        self.assertTrue(hk.phi_conditions(params, PhiAnsatz(3, 20)).feasible)
        # both bounds attained: alpha = 1/A = 2, beta = (6 + 4B)/A = 20
        tight = hk.phi_conditions(params, PhiAnsatz(2, 20))
        self.assertFalse(tight.feasible)
        self.assertEqual([cond.name for cond in tight.failed()], ["one strict"])
        self.assertFalse(hk.phi_conditions(params, PhiAnsatz(1, 25)).feasible)

    def test_negative_alpha_rejected(self):
        with self.assertRaises(ParameterError):
            PhiAnsatz(-1, 0)

    def test_lower_bound_coefficients(self):
        params = AnsatzParams.symbolic()
        coeffs = hk.phi_lower_bound(params)
        A, B = hk.coefficient_A(params), hk.coefficient_B(params)
        alpha, beta = hk.ALPHA_SYM, hk.BETA_SYM
        self.assertEqual(sp.simplify(coeffs["1/t^2"] - (A * alpha ** 2 - alpha)), 0)
        self.assertEqual(sp.simplify(coeffs["1/(t s^2)"] - 2 * A * alpha * beta), 0)
        self.assertEqual(sp.simplify(coeffs["1/s^4"] - (A * beta ** 2 - 6 * beta - 4 * beta * B)), 0)

    def test_lower_bound_symbolic_specialises_to_concrete(self):
        symbolic = hk.phi_lower_bound(AnsatzParams.symbolic())
        concrete = hk.phi_lower_bound(AnsatzParams(2, 1, 0))
        for key, value in concrete.items():
            specialised = symbolic[key].subs({hk.A_SYM: 2, hk.B_SYM: 1})
            self.assertEqual(sp.simplify(specialised - value), 0, key)
        self.assertEqual(sp.simplify(concrete["1/t^2"] - (hk.ALPHA_SYM ** 2 / 2 - hk.ALPHA_SYM)), 0)

    def test_ratio_gap_nonnegative(self):
        alpha, beta, s, t = hk.ALPHA_SYM, hk.BETA_SYM, hk.S_SYM, hk.T_SYM
        gap = hk.phi_ratio_gap()
        self.assertEqual(sp.simplify(gap - 4 * alpha * beta / (s ** 2 * (alpha * s ** 2 + beta * t))), 0)

    def test_completed_square(self):
        self.assertEqual(hk.cauchy_schwarz_gap(AnsatzParams(2, 1, 0)), 0)
        self.assertEqual(hk.cauchy_schwarz_gap(AnsatzParams.symbolic()), 0)
        with self.assertRaises(ParameterError):
            hk.cauchy_schwarz_gap(AnsatzParams(1, 0, 1))

    def test_summary_conditions(self):
        summary = hk.summary_conditions()
        self.assertTrue(summary["alpha_matches"])
        self.assertTrue(summary["beta_matches"])


class TestSolveFamily(unittest.TestCase):

    def test_collapse(self):
        solution = hk.solve_family()
        a = hk.A_SYM
        self.assertEqual(solution.constraints["b"], 0)
        self.assertEqual(solution.constraints["beta"], 0)
        self.assertEqual(sp.simplify(solution.constraints["c"] - a), 0)
        self.assertEqual(sp.simplify(solution.constraints["alpha"] - (a / 2 + hk.EPS_SYM)), 0)
        self.assertEqual(solution.grid_feasible, 0)
        self.assertEqual(solution.grid_size, 9)

    def test_final_expression(self):
        solution = hk.solve_family()
        self.assertEqual(solution.rescaled.pretty(), "u_ss + E + (epsilon + 1/2)/t")
        self.assertEqual(solution.rescaled.spatial, dp.U_SS + dp.E)

    def test_a_seven(self):
        lower = hk.condition_bounds().lower.subs({hk.A_SYM: 7, hk.B_SYM: 0})
        self.assertEqual(lower, 7)
        params = AnsatzParams(7, 0, 7)
        self.assertFalse(hk.phi_conditions(params, PhiAnsatz("7/2")).feasible)
        self.assertTrue(hk.phi_conditions(params, PhiAnsatz("351/100")).feasible)


class TestSpecialization(unittest.TestCase):

    def test_contradiction_values(self):
        for eps in (sp.Rational(1, 100), sp.Integer(1), sp.Rational(7, 3)):
            check = hk.verify_specialized_remainder(eps)
            self.assertTrue(check.matches_expected, eps)
            self.assertTrue(check.matches_general, eps)
            self.assertEqual(check.contradiction, 2 * eps ** 2 + eps)
            self.assertTrue(check.holds)
        self.assertEqual(hk.verify_specialized_remainder("1/100").contradiction, sp.Rational(51, 5000))

    def test_epsilon_zero(self):
        self.assertEqual(hk.verify_specialized_remainder(0).contradiction, 0)

    def test_negative_epsilon_rejected(self):
        with self.assertRaises(ParameterError):
            hk.verify_specialized_remainder(-1)


class TestSearch(unittest.TestCase):

    def test_deterministic(self):
        first = hk.search(seed=4, count=8)
        second = hk.search(seed=4, count=8)
        self.assertTrue(first.equals(second))
        self.assertEqual(len(first), 8)

    def test_feasible_samples_sit_on_curvature_branch(self):
        results = hk.search(seed=1, count=40)
        for row in results[results["feasible"]].itertuples():
            self.assertEqual(row.b, "0")
            self.assertEqual(row.c, row.a)


if __name__ == '__main__':
    unittest.main()

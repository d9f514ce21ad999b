"""selftest: every invariant suite on one config, plus the algebraic identities.

Suites run in a fixed order on one generator, so a seed fixes every report
byte for byte.
"""

import numpy as np

from logger_setup import get_logger
from operators.calculus import expand_left_product, expand_right_product
from operators.fields import PolynomialField, multiply
from operators.fock import SymTensor, apply_S, apply_T, solve_R
from operators.symbols import X, XI, OscillatingSymbol, zero_phase
from processors import amp2sym_processor, compose_processor, kernel_processor, sandwich_processor
from processors import stationary_processor, weyl_processor
from processors.verification import ExperimentOutcome, guarded
from services.report_service import ReportTable
from settings import ExperimentConfig

logger = get_logger()

SUITES = (
    ("compose", compose_processor.run),
    ("amp2sym", amp2sym_processor.run),
    ("stationary", stationary_processor.run),
    ("weyl", weyl_processor.run),
    ("kernel", kernel_processor.run),
    ("sandwich", sandwich_processor.run),
)

FOCK_CASES = ((1, 1), (3, 2), (4, 3), (2, 5), (5, 2))
ALGEBRA_TOL = 1e-10
CLASSICAL_TOL = 1e-9
CLASSICAL_PROBES = ((0.3, 1.7), (-1.2, 0.5), (2.0, -3.0))


def monomial(power_x: int, power_xi: int, phase=None) -> OscillatingSymbol:
    """x^j ξ^k as a symbol of order k in d = 1 (Φ ≡ 0 unless given)."""
    phase = zero_phase(1) if phase is None else phase
    base = multiply(PolynomialField({(power_x,): 1.0}, X, 2, 1), PolynomialField({(power_xi,): 1.0}, XI, 2, 1))
    return OscillatingSymbol(phase, base, float(power_xi))


def classical_cases():
    """(label, expansion, exact symbol) for operator products of polynomial symbols.

    With D = −i∂: D∘x = xD − i, x·D = xD, and xD∘D²x² = x³D³ − 6i x²D² − 6xD.
    """
    phase = zero_phase(1)
    xi, x = monomial(0, 1, phase), monomial(1, 0, phase)
    left, right = monomial(1, 1, phase), monomial(2, 2, phase)
    return [
        ("op(ξ)op(x)*", expand_right_product(xi, x, 2), lambda p, q: p * q - 1j),
        ("op(x)*op(ξ)", expand_left_product(xi, x, 2), lambda p, q: p * q),
        (
            "op(xξ)op(x²ξ²)*",
            expand_right_product(left, right, 3),
            lambda p, q: p ** 3 * q ** 3 - 6j * p ** 2 * q ** 2 - 6 * p * q,
        ),
    ]


class SelftestProcessor:
    def __init__(self, cfg: ExperimentConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.outcome = ExperimentOutcome("selftest")

    def run(self) -> ExperimentOutcome:
        algebra = ExperimentOutcome("algebra")
        guarded(algebra, "Fock identities", lambda: self.fock(algebra))
        guarded(algebra, "classical composition", lambda: self.classical(algebra))
        self.outcome.merge(algebra)
        for name, run in SUITES:
            logger.info(f"Selftest suite: {name}")
            self.outcome.merge(run(self.cfg, self.rng))
        return self.outcome

    def fock(self, outcome: ExperimentOutcome) -> None:
        """TS = ‖t‖²I + ST on M_n and T_n R = I on M_{n−1} for random tensors."""
        table = ReportTable(
            "selftest_fock",
            ["n", "d", "commutator_residual", "right_inverse_residual"],
            identity="T S Ψ = ‖t‖²Ψ + S T Ψ; T(R F) = F",
            units="coefficient max-norms relative to the input",
        )
        for n, d in FOCK_CASES:
            t = self.rng.standard_normal(d)
            psi = SymTensor.random(n, d, self.rng)
            lhs = apply_T(apply_S(psi, t), t)
            rhs = psi.scale(float(t @ t)) + apply_S(apply_T(psi, t), t)
            commutator = (lhs - rhs).norm() / max(lhs.norm(), 1e-300)
            F = SymTensor.random(n - 1, d, self.rng)
            inverse = (apply_T(solve_R(F, t), t) - F).norm() / max(F.norm(), 1e-300)
            table.add(n, d, commutator, inverse)
            outcome.verification.at_most(f"TS = ‖t‖²I + ST on M_{n}^({d})", commutator, ALGEBRA_TOL)
            outcome.verification.at_most(f"T R = I on M_{n - 1}^({d})", inverse, ALGEBRA_TOL)
        outcome.tables.append(table)

    def classical(self, outcome: ExperimentOutcome) -> None:
        """Φ ≡ 0 expansions reproduce exact polynomial compositions."""
        table = ReportTable(
            "selftest_classical",
            ["case", "x", "xi", "expansion_re", "expansion_im", "exact_re", "exact_im"],
            identity="ρ = 1, δ = 0 calculus: the finite expansion of a polynomial product is exact",
            units="symbol values absolute",
        )
        for label, expansion, exact in classical_cases():
            worst = 0.0
            for p, q in CLASSICAL_PROBES:
                value = complex(np.asarray(expansion.truncated_sum(np.array([p]), np.array([q]))).reshape(-1)[0])
                target = complex(exact(p, q))
                worst = max(worst, abs(value - target))
                table.add(label, p, q, value.real, value.imag, target.real, target.imag)
            outcome.verification.at_most(f"classical {label}", worst, CLASSICAL_TOL)
        outcome.tables.append(table)


def run(cfg: ExperimentConfig, rng: np.random.Generator) -> ExperimentOutcome:
    return SelftestProcessor(cfg, rng).run()

//! Exact-arithmetic problem instances and the boundedness decision procedure.
//!
//! An [`Instance`] bundles the product-space data (factor dimensions `N_i`,
//! kernel orders `alpha_i`, Lebesgue exponents `p <= q`, weight powers
//! `gamma`, `delta`) in exact rationals. [`Instance::verdict`] decides
//! boundedness of the strong fractional integral operator between the
//! corresponding weighted norms by checking the explicit constraint system:
//! the exponent balance identity, local integrability of both weights, the
//! per-factor subbalance lower bounds, and the sign-split per-factor /
//! subset-sum constraints. Strict inequalities that hold with equality are
//! reported as `Endpoint`, never silently as `Bounded`.

use std::collections::BTreeSet;
use std::fmt;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{
    parse_rational, rat_int, rational_to_string, serde_rational, serde_rational_vec, Rational,
    RationalParseError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("a product space needs at least one factor")]
    NoFactors,
    #[error("factor {index} has dimension 0")]
    ZeroDimension { index: usize },
    #[error("expected {expected} orders alpha_i, got {got}")]
    AlphaCount { expected: usize, got: usize },
    #[error("alpha_{index} = {value} is outside the open interval (0, {dim})")]
    AlphaOutOfRange {
        index: usize,
        value: String,
        dim: u32,
    },
    #[error("exponent p = {0} must be > 1")]
    PNotAboveOne(String),
    #[error("exponents must satisfy p <= q, got p = {p}, q = {q}")]
    ExponentOrder { p: String, q: String },
    #[error("rational field {field}: {source}")]
    Parse {
        field: &'static str,
        source: RationalParseError,
    },
    #[error("subbalance violated at factor {index}: alpha_i/N_i < 1/p - 1/q")]
    SubbalanceViolated { index: usize },
    #[error("eps = {eps} too large: needs eps < 1/q and eps < (p-1)/p")]
    EpsTooLarge { eps: String },
    #[error("eps must be positive")]
    EpsNotPositive,
    #[error("instance is neither an Endpoint verdict nor at a range-window edge; nothing to perturb")]
    NotAnEndpoint,
    #[error("equivalence check requires gamma >= 0, delta <= 0 or gamma <= 0, delta >= 0 and an exact exponent balance")]
    EquivalenceOutOfScope,
}

/// The underlying product space `R^{N_1} x ... x R^{N_n}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductSpace {
    dims: Vec<u32>,
}

impl ProductSpace {
    pub fn new(dims: Vec<u32>) -> Result<Self, ParamError> {
        if dims.is_empty() {
            return Err(ParamError::NoFactors);
        }
        if let Some(index) = dims.iter().position(|&d| d == 0) {
            return Err(ParamError::ZeroDimension { index });
        }
        Ok(ProductSpace { dims })
    }

    /// Number of factors `n`.
    pub fn factors(&self) -> usize {
        self.dims.len()
    }

    /// Dimension `N_i` of factor `i`.
    pub fn dim(&self, i: usize) -> u32 {
        self.dims[i]
    }

    pub fn dims(&self) -> &[u32] {
        &self.dims
    }

    /// Total dimension `N = sum N_i`.
    pub fn total_dim(&self) -> u32 {
        self.dims.iter().sum()
    }
}

/// Identifiers for the individual constraints of the decision procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintId {
    /// Exponent balance identity: `alpha/N = 1/p - 1/q + (gamma+delta)/N`.
    Formula,
    /// Local integrability of `omega^q`: `gamma < N/q`.
    GammaIntegrability,
    /// Local integrability of `sigma^{-p/(p-1)}`: `delta < N(p-1)/p`.
    DeltaIntegrability,
    /// `gamma + delta >= 0` (inclusive).
    NonnegativePowerSum,
    /// Per-factor subbalance `alpha_i/N_i >= 1/p - 1/q` (inclusive).
    Subbalance(usize),
    /// For `gamma >= 0, delta <= 0`: `alpha_i - N_i/p < delta`.
    DeltaDominates(usize),
    /// For `gamma <= 0, delta >= 0`: `alpha_i - N_i (q-1)/q < gamma`.
    GammaDominates(usize),
    /// For `gamma > 0, delta > 0`: `sum_{i in U} (alpha_i - N_i/p) < delta`.
    SubsetSumDelta,
    /// For `gamma > 0, delta > 0`: `sum_{i in V} (alpha_i - N_i (q-1)/q) < gamma`.
    SubsetSumGamma,
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::Formula => write!(f, "formula"),
            ConstraintId::GammaIntegrability => write!(f, "gamma-integrability"),
            ConstraintId::DeltaIntegrability => write!(f, "delta-integrability"),
            ConstraintId::NonnegativePowerSum => write!(f, "gamma+delta>=0"),
            ConstraintId::Subbalance(i) => write!(f, "subbalance[{i}]"),
            ConstraintId::DeltaDominates(i) => write!(f, "delta-dominates[{i}]"),
            ConstraintId::GammaDominates(i) => write!(f, "gamma-dominates[{i}]"),
            ConstraintId::SubsetSumDelta => write!(f, "subset-sum-delta"),
            ConstraintId::SubsetSumGamma => write!(f, "subset-sum-gamma"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseTag {
    /// `gamma >= 0, delta <= 0`.
    CaseOne,
    /// `gamma <= 0, delta >= 0`.
    CaseTwo,
    /// `gamma > 0, delta > 0`.
    CaseThree,
    /// `gamma + delta = 0` with every `alpha_i/N_i = 1/p - 1/q` exactly.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Bounded,
    Unbounded,
    Endpoint,
}

/// Outcome of the full constraint evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub case: CaseTag,
    /// Constraints that fail outright.
    pub violations: Vec<ConstraintId>,
    /// Strict inequalities that hold with equality (drives `Endpoint`).
    pub binding: Vec<ConstraintId>,
}

impl Verdict {
    pub fn is_bounded(&self) -> bool {
        self.status == Status::Bounded
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaCheck {
    pub holds: bool,
    /// `alpha/N - (1/p - 1/q) - (gamma+delta)/N`, exact.
    pub residual: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegrabilityCheck {
    pub gamma_ok: bool,
    pub delta_ok: bool,
    pub sum_ok: bool,
    pub gamma_binding: bool,
    pub delta_binding: bool,
    pub sum_binding: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseCheck {
    pub case: CaseTag,
    pub ok: bool,
    pub violated: Vec<ConstraintId>,
    pub binding: Vec<ConstraintId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubbalanceFlags {
    /// `alpha_i/N_i > 1/p - 1/q`.
    pub strict: bool,
    /// `alpha_i/N_i >= 1/p - 1/q`.
    pub weak: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceCheck {
    pub agree: bool,
    /// Per factor: (threshold form, dominance form) truth values.
    pub per_index: Vec<(bool, bool)>,
}

/// Both neighbors of an endpoint under the reciprocal-exponent shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndpointPerturbation {
    /// `1/p - eps`, `1/q - eps` side.
    pub minus: Instance,
    /// `1/p + eps`, `1/q + eps` side.
    pub plus: Instance,
    pub minus_verdict: Verdict,
    pub plus_verdict: Verdict,
    /// True when both neighbors come back `Bounded`.
    pub both_bounded: bool,
}

/// JSON schema for instances; rationals travel as `"num/den"` strings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub dims: Vec<u32>,
    pub alpha: Vec<String>,
    pub p: String,
    pub q: String,
    pub gamma: String,
    pub delta: String,
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    space: ProductSpace,
    #[serde(with = "serde_rational_vec")]
    alpha: Vec<Rational>,
    #[serde(with = "serde_rational")]
    p: Rational,
    #[serde(with = "serde_rational")]
    q: Rational,
    #[serde(with = "serde_rational")]
    gamma: Rational,
    #[serde(with = "serde_rational")]
    delta: Rational,
}

impl Instance {
    /// Validates all invariants: `N_i >= 1`, `0 < alpha_i < N_i`, `1 < p <= q`.
    pub fn new(
        dims: Vec<u32>,
        alpha: Vec<Rational>,
        p: Rational,
        q: Rational,
        gamma: Rational,
        delta: Rational,
    ) -> Result<Self, ParamError> {
        let space = ProductSpace::new(dims)?;
        if alpha.len() != space.factors() {
            return Err(ParamError::AlphaCount {
                expected: space.factors(),
                got: alpha.len(),
            });
        }
        for (i, a) in alpha.iter().enumerate() {
            let dim = rat_int(space.dim(i) as i64);
            if !a.is_positive() || *a >= dim {
                return Err(ParamError::AlphaOutOfRange {
                    index: i,
                    value: rational_to_string(a),
                    dim: space.dim(i),
                });
            }
        }
        if p <= Rational::one() {
            return Err(ParamError::PNotAboveOne(rational_to_string(&p)));
        }
        if q < p {
            return Err(ParamError::ExponentOrder {
                p: rational_to_string(&p),
                q: rational_to_string(&q),
            });
        }
        Ok(Instance {
            space,
            alpha,
            p,
            q,
            gamma,
            delta,
        })
    }

    pub fn from_spec(spec: &InstanceSpec) -> Result<Self, ParamError> {
        fn field(name: &'static str, s: &str) -> Result<Rational, ParamError> {
            parse_rational(s).map_err(|source| ParamError::Parse {
                field: name,
                source,
            })
        }
        let alpha = spec
            .alpha
            .iter()
            .map(|s| field("alpha", s))
            .collect::<Result<Vec<_>, _>>()?;
        Instance::new(
            spec.dims.clone(),
            alpha,
            field("p", &spec.p)?,
            field("q", &spec.q)?,
            field("gamma", &spec.gamma)?,
            field("delta", &spec.delta)?,
        )
    }

    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            dims: self.space.dims().to_vec(),
            alpha: self.alpha.iter().map(rational_to_string).collect(),
            p: rational_to_string(&self.p),
            q: rational_to_string(&self.q),
            gamma: rational_to_string(&self.gamma),
            delta: rational_to_string(&self.delta),
        }
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }
    pub fn alpha(&self, i: usize) -> &Rational {
        &self.alpha[i]
    }
    pub fn alphas(&self) -> &[Rational] {
        &self.alpha
    }
    pub fn p(&self) -> &Rational {
        &self.p
    }
    pub fn q(&self) -> &Rational {
        &self.q
    }
    pub fn gamma(&self) -> &Rational {
        &self.gamma
    }
    pub fn delta(&self) -> &Rational {
        &self.delta
    }

    pub fn alpha_total(&self) -> Rational {
        self.alpha.iter().fold(Rational::zero(), |acc, a| acc + a)
    }

    /// `1/p - 1/q`.
    pub fn pq_gap(&self) -> Rational {
        self.p.recip() - self.q.recip()
    }

    /// `alpha_i - N_i (1/p - 1/q)`; zero marks a balanced factor.
    pub fn factor_excess(&self, i: usize) -> Rational {
        &self.alpha[i] - rat_int(self.space.dim(i) as i64) * self.pq_gap()
    }

    /// `N_i / p`.
    pub fn dim_over_p(&self, i: usize) -> Rational {
        rat_int(self.space.dim(i) as i64) * self.p.recip()
    }

    /// `N_i (q-1)/q`.
    pub fn dim_times_q_conj(&self, i: usize) -> Rational {
        rat_int(self.space.dim(i) as i64) * (Rational::one() - self.q.recip())
    }

    /// Dual data `(delta, gamma, q/(q-1), p/(p-1))`; maps the two sign cases
    /// onto each other with the same verdict.
    pub fn dual(&self) -> Instance {
        let p_dual = (Rational::one() - self.q.recip()).recip();
        let q_dual = (Rational::one() - self.p.recip()).recip();
        Instance {
            space: self.space.clone(),
            alpha: self.alpha.clone(),
            p: p_dual,
            q: q_dual,
            gamma: self.delta.clone(),
            delta: self.gamma.clone(),
        }
    }

    /// Exponent balance identity, evaluated exactly.
    pub fn check_formula(&self) -> FormulaCheck {
        let n_total = rat_int(self.space.total_dim() as i64);
        let residual = self.alpha_total() / n_total.clone()
            - self.pq_gap()
            - (&self.gamma + &self.delta) / n_total;
        FormulaCheck {
            holds: residual.is_zero(),
            residual,
        }
    }

    /// Local integrability of both weights plus the power-sum sign condition.
    pub fn check_integrability(&self) -> IntegrabilityCheck {
        let n_total = rat_int(self.space.total_dim() as i64);
        let gamma_cap = n_total.clone() * self.q.recip();
        let delta_cap = n_total * (Rational::one() - self.p.recip());
        let sum = &self.gamma + &self.delta;
        IntegrabilityCheck {
            gamma_ok: self.gamma < gamma_cap,
            delta_ok: self.delta < delta_cap,
            sum_ok: !sum.is_negative(),
            gamma_binding: self.gamma == gamma_cap,
            delta_binding: self.delta == delta_cap,
            sum_binding: sum.is_zero(),
        }
    }

    /// Index sets `U = {i : alpha_i - N_i/p >= 0}` and
    /// `V = {i : alpha_i - N_i (q-1)/q >= 0}` (inclusive boundaries).
    pub fn subsets_uv(&self) -> (Vec<usize>, Vec<usize>) {
        let mut u = Vec::new();
        let mut v = Vec::new();
        for i in 0..self.space.factors() {
            if !(self.alpha[i].clone() - self.dim_over_p(i)).is_negative() {
                u.push(i);
            }
            if !(self.alpha[i].clone() - self.dim_times_q_conj(i)).is_negative() {
                v.push(i);
            }
        }
        (u, v)
    }

    /// Sign classification of `(gamma, delta)` plus the balanced special case.
    pub fn case_tag(&self) -> CaseTag {
        let g = &self.gamma;
        let d = &self.delta;
        if (g.clone() + d).is_zero() && self.is_balanced() {
            return CaseTag::Balanced;
        }
        if g.is_positive() && d.is_positive() {
            CaseTag::CaseThree
        } else if !g.is_negative() && !d.is_positive() {
            CaseTag::CaseOne
        } else if !g.is_positive() && !d.is_negative() {
            CaseTag::CaseTwo
        } else {
            // gamma < 0, delta < 0: power sum is negative; still report by sign.
            CaseTag::CaseOne
        }
    }

    /// Every factor balanced: `alpha_i/N_i = 1/p - 1/q`.
    pub fn is_balanced(&self) -> bool {
        (0..self.space.factors()).all(|i| self.factor_excess(i).is_zero())
    }

    /// Evaluates the sign-split constraints. For `gamma = delta = 0` both the
    /// CaseOne and CaseTwo families apply and both are evaluated.
    pub fn check_case_constraints(&self) -> CaseCheck {
        let mut violated = Vec::new();
        let mut binding = Vec::new();
        let g = &self.gamma;
        let d = &self.delta;
        let case_one_applies = !g.is_negative() && !d.is_positive();
        let case_two_applies = !g.is_positive() && !d.is_negative();
        let case_three_applies = g.is_positive() && d.is_positive();

        if case_one_applies {
            for i in 0..self.space.factors() {
                let lhs = self.alpha[i].clone() - self.dim_over_p(i);
                if lhs > *d {
                    violated.push(ConstraintId::DeltaDominates(i));
                } else if lhs == *d {
                    binding.push(ConstraintId::DeltaDominates(i));
                }
            }
        }
        if case_two_applies {
            for i in 0..self.space.factors() {
                let lhs = self.alpha[i].clone() - self.dim_times_q_conj(i);
                if lhs > *g {
                    violated.push(ConstraintId::GammaDominates(i));
                } else if lhs == *g {
                    binding.push(ConstraintId::GammaDominates(i));
                }
            }
        }
        if case_three_applies {
            let (u, v) = self.subsets_uv();
            let u_sum = u
                .iter()
                .fold(Rational::zero(), |acc, &i| {
                    acc + self.alpha[i].clone() - self.dim_over_p(i)
                });
            let v_sum = v
                .iter()
                .fold(Rational::zero(), |acc, &i| {
                    acc + self.alpha[i].clone() - self.dim_times_q_conj(i)
                });
            if u_sum > *d {
                violated.push(ConstraintId::SubsetSumDelta);
            } else if u_sum == *d {
                binding.push(ConstraintId::SubsetSumDelta);
            }
            if v_sum > *g {
                violated.push(ConstraintId::SubsetSumGamma);
            } else if v_sum == *g {
                binding.push(ConstraintId::SubsetSumGamma);
            }
        }

        CaseCheck {
            case: self.case_tag(),
            ok: violated.is_empty(),
            violated,
            binding,
        }
    }

    /// Per-factor subbalance flags (weak and strict forms).
    pub fn strict_subbalance(&self) -> Vec<SubbalanceFlags> {
        (0..self.space.factors())
            .map(|i| {
                let excess = self.factor_excess(i);
                SubbalanceFlags {
                    strict: excess.is_positive(),
                    weak: !excess.is_negative(),
                }
            })
            .collect()
    }

    /// Full decision procedure.
    ///
    /// `Unbounded` iff some constraint fails outright (the exponent balance,
    /// a weight integrability bound, `gamma + delta >= 0`, per-factor
    /// subbalance, or a sign-case constraint). `Endpoint` iff nothing fails
    /// but one of the strict inequalities holds with equality. The inclusive
    /// conditions (`gamma + delta >= 0`, subbalance, U/V membership) never
    /// produce `Endpoint` on their own.
    pub fn verdict(&self) -> Verdict {
        let mut violations = Vec::new();
        let mut binding = Vec::new();

        let formula = self.check_formula();
        if !formula.holds {
            violations.push(ConstraintId::Formula);
        }

        let integ = self.check_integrability();
        if !integ.gamma_ok {
            if integ.gamma_binding {
                binding.push(ConstraintId::GammaIntegrability);
            } else {
                violations.push(ConstraintId::GammaIntegrability);
            }
        }
        if !integ.delta_ok {
            if integ.delta_binding {
                binding.push(ConstraintId::DeltaIntegrability);
            } else {
                violations.push(ConstraintId::DeltaIntegrability);
            }
        }
        if !integ.sum_ok {
            violations.push(ConstraintId::NonnegativePowerSum);
        }

        for (i, flags) in self.strict_subbalance().iter().enumerate() {
            if !flags.weak {
                violations.push(ConstraintId::Subbalance(i));
            }
        }

        let cases = self.check_case_constraints();
        violations.extend(cases.violated.iter().copied());
        binding.extend(cases.binding.iter().copied());

        let status = if !violations.is_empty() {
            Status::Unbounded
        } else if !binding.is_empty() {
            Status::Endpoint
        } else {
            Status::Bounded
        };
        Verdict {
            status,
            case: cases.case,
            violations,
            binding,
        }
    }

    /// Partition into balanced (`I`) and strictly sub-balanced-above (`J`)
    /// factors. Defined only when weak subbalance holds everywhere.
    pub fn partition_ij(&self) -> Result<(Vec<usize>, Vec<usize>), ParamError> {
        let mut balanced = Vec::new();
        let mut strict = Vec::new();
        for i in 0..self.space.factors() {
            let excess = self.factor_excess(i);
            if excess.is_negative() {
                return Err(ParamError::SubbalanceViolated { index: i });
            } else if excess.is_zero() {
                balanced.push(i);
            } else {
                strict.push(i);
            }
        }
        Ok((balanced, strict))
    }

    /// Verifies, index by index, that the two equivalent forms of the
    /// sign-case constraints decide identically under the exponent balance
    /// identity: the threshold form compares `gamma` (resp. `delta`) against
    /// `N_i/q + sum_{j != i} (alpha_j - N_j (1/p - 1/q))`, the dominance form
    /// compares `alpha_i - N_i/p` against `delta` (resp. the dual pair).
    pub fn equivalent_forms_check(&self) -> Result<EquivalenceCheck, ParamError> {
        if !self.check_formula().holds {
            return Err(ParamError::EquivalenceOutOfScope);
        }
        let g = &self.gamma;
        let d = &self.delta;
        let case_one = !g.is_negative() && !d.is_positive();
        let case_two = !g.is_positive() && !d.is_negative();
        if !case_one && !case_two {
            return Err(ParamError::EquivalenceOutOfScope);
        }

        let n = self.space.factors();
        let mut per_index = Vec::with_capacity(n);
        let mut agree = true;
        for i in 0..n {
            let off_sum: Rational = (0..n)
                .filter(|&j| j != i)
                .fold(Rational::zero(), |acc, j| acc + self.factor_excess(j));
            let (threshold_form, dominance_form) = if case_one {
                let ni_q = rat_int(self.space.dim(i) as i64) * self.q.recip();
                (
                    *g < ni_q + off_sum,
                    self.alpha[i].clone() - self.dim_over_p(i) < *d,
                )
            } else {
                let ni_pc =
                    rat_int(self.space.dim(i) as i64) * (Rational::one() - self.p.recip());
                (
                    *d < ni_pc + off_sum,
                    self.alpha[i].clone() - self.dim_times_q_conj(i) < *g,
                )
            };
            agree &= threshold_form == dominance_form;
            per_index.push((threshold_form, dominance_form));
        }
        Ok(EquivalenceCheck { agree, per_index })
    }

    /// Shifts both reciprocal exponents by `+/-eps` and re-runs the verdict on
    /// each neighbor. `1/p - 1/q` is preserved, so the balance identity
    /// survives; binding equalities split one way or the other.
    pub fn perturb_endpoints(&self, eps: &Rational) -> Result<EndpointPerturbation, ParamError> {
        if !eps.is_positive() {
            return Err(ParamError::EpsNotPositive);
        }
        let own = self.verdict();
        if own.status != Status::Endpoint && range_endpoints(self).is_empty() {
            return Err(ParamError::NotAnEndpoint);
        }
        let inv_q_minus = self.q.recip() - eps;
        let inv_p_plus = self.p.recip() + eps;
        if !inv_q_minus.is_positive() || inv_p_plus >= Rational::one() {
            return Err(ParamError::EpsTooLarge {
                eps: rational_to_string(eps),
            });
        }
        let minus = Instance::new(
            self.space.dims().to_vec(),
            self.alpha.clone(),
            (self.p.recip() - eps).recip(),
            inv_q_minus.recip(),
            self.gamma.clone(),
            self.delta.clone(),
        )?;
        let plus = Instance::new(
            self.space.dims().to_vec(),
            self.alpha.clone(),
            inv_p_plus.recip(),
            (self.q.recip() + eps).recip(),
            self.gamma.clone(),
            self.delta.clone(),
        )?;
        let minus_verdict = minus.verdict();
        let plus_verdict = plus.verdict();
        let both_bounded =
            minus_verdict.status == Status::Bounded && plus_verdict.status == Status::Bounded;
        Ok(EndpointPerturbation {
            minus,
            plus,
            minus_verdict,
            plus_verdict,
            both_bounded,
        })
    }
}

/// All subset sums of the factor dimensions, as integers.
pub fn dimension_subset_sums(space: &ProductSpace) -> BTreeSet<u64> {
    let mut sums = BTreeSet::new();
    sums.insert(0u64);
    for &d in space.dims() {
        let existing: Vec<u64> = sums.iter().copied().collect();
        for s in existing {
            sums.insert(s + d as u64);
        }
    }
    sums
}

/// Window edges that a positive weight power may sit on: `gamma q` or
/// `delta p/(p-1)` equal to a subset sum of the `N_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RangeEndpoint {
    GammaWindowEdge,
    DeltaWindowEdge,
    SumWindowEdge,
    NegDeltaWindowEdge,
}

fn on_proper_sum_lattice(value: &Rational, space: &ProductSpace) -> bool {
    if !value.is_positive() {
        return false;
    }
    let total = space.total_dim() as u64;
    dimension_subset_sums(space)
        .iter()
        .filter(|&&s| s != 0 && s != total)
        .any(|&s| *value == rat_int(s as i64))
}

/// Detects the window-edge configurations where the decay machinery
/// degenerates even though the verdict itself is `Bounded`: the scaled powers
/// `gamma q`, `delta p/(p-1)`, `(gamma+delta) q`, `(-delta) q` landing on a
/// proper subset sum of the factor dimensions.
pub fn range_endpoints(inst: &Instance) -> Vec<RangeEndpoint> {
    let mut found = Vec::new();
    let gq = inst.gamma() * inst.q();
    let dp = inst.delta().clone() * inst.p() / (inst.p() - Rational::one());
    let sumq = (inst.gamma() + inst.delta()) * inst.q();
    let negdq = -inst.delta().clone() * inst.q();
    if on_proper_sum_lattice(&gq, inst.space()) {
        found.push(RangeEndpoint::GammaWindowEdge);
    }
    if on_proper_sum_lattice(&dp, inst.space()) {
        found.push(RangeEndpoint::DeltaWindowEdge);
    }
    if on_proper_sum_lattice(&sumq, inst.space()) {
        found.push(RangeEndpoint::SumWindowEdge);
    }
    if on_proper_sum_lattice(&negdq, inst.space()) {
        found.push(RangeEndpoint::NegDeltaWindowEdge);
    }
    found
}

/// Interior test for the decay-bound windows: positive scaled powers must
/// avoid every subset sum of the factor dimensions.
pub fn decay_range_interior(inst: &Instance) -> bool {
    let gq = inst.gamma() * inst.q();
    let dp = inst.delta().clone() * inst.p() / (inst.p() - Rational::one());
    let sums = dimension_subset_sums(inst.space());
    let on_lattice = |v: &Rational| {
        v.is_positive() && sums.iter().any(|&s| *v == rat_int(s as i64))
    };
    !on_lattice(&gq) && !on_lattice(&dp)
}

//! Set functions over feature coalitions and the linear maps between the
//! capacity, Möbius and Shapley-interaction bases.
//!
//! Values are stored for the non-empty coalitions of size at most `k` in
//! canonical order (see [`crate::coalition`]). The empty coalition is never
//! stored: in the Möbius and Shapley bases its value is zero, and a capacity
//! vanishes on it by definition.

use serde::{Deserialize, Serialize};

use crate::coalition::{self, Coalition, CoalitionIndex};
use crate::error::{Error, Result};

/// Full-order operations materialize `2^n` values.
pub const MAX_FULL_ORDER: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Capacity,
    Moebius,
    Shapley,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SetFunctionRepr", try_from = "SetFunctionRepr")]
pub struct SetFunction {
    n: usize,
    k: usize,
    basis: Basis,
    values: Vec<f64>,
}

/// A cooperative game: a capacity-basis set function without monotonicity
/// or normalization constraints.
pub type Game = SetFunction;

impl SetFunction {
    pub fn new(n: usize, k: usize, basis: Basis, values: Vec<f64>) -> Result<Self> {
        let dim = coalition::combinatorial_dimension(n, k)?;
        if values.len() as u64 != dim {
            return Err(Error::invalid(format!(
                "set function on n={n}, k={k} needs {dim} values, got {}",
                values.len()
            )));
        }
        Ok(SetFunction {
            n,
            k,
            basis,
            values,
        })
    }

    pub fn zeros(n: usize, k: usize, basis: Basis) -> Result<Self> {
        let idx = CoalitionIndex::new(n, k)?;
        Ok(SetFunction {
            n,
            k,
            basis,
            values: vec![0.0; idx.dimension()],
        })
    }

    /// Evaluates `f` on every stored coalition in canonical order.
    pub fn from_fn(
        n: usize,
        k: usize,
        basis: Basis,
        mut f: impl FnMut(Coalition) -> f64,
    ) -> Result<Self> {
        let values = coalition::enumerate_coalitions(n, k)?
            .into_iter()
            .map(&mut f)
            .collect();
        Ok(SetFunction {
            n,
            k,
            basis,
            values,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coalitions(&self) -> Vec<Coalition> {
        coalition::enumerate_coalitions(self.n, self.k).expect("validated at construction")
    }

    /// Value at `a`; zero for the empty coalition and for coalitions above order `k`.
    pub fn get(&self, a: Coalition) -> f64 {
        let idx = CoalitionIndex::new(self.n, self.k).expect("validated at construction");
        idx.index_of(a).map_or(0.0, |i| self.values[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.coalitions()
            .into_iter()
            .zip(self.values.iter().copied())
    }

    fn expect_basis(&self, expected: Basis) -> Result<()> {
        if self.basis != expected {
            return Err(Error::BasisMismatch {
                expected,
                found: self.basis,
            });
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct EntryRepr {
    coalition: Vec<usize>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct SetFunctionRepr {
    n: usize,
    k: usize,
    basis: Basis,
    entries: Vec<EntryRepr>,
}

impl From<SetFunction> for SetFunctionRepr {
    fn from(f: SetFunction) -> Self {
        let entries = f
            .entries()
            .map(|(c, value)| EntryRepr {
                coalition: c.members().collect(),
                value,
            })
            .collect();
        SetFunctionRepr {
            n: f.n,
            k: f.k,
            basis: f.basis,
            entries,
        }
    }
}

impl TryFrom<SetFunctionRepr> for SetFunction {
    type Error = Error;

    fn try_from(r: SetFunctionRepr) -> Result<Self> {
        let idx = CoalitionIndex::new(r.n, r.k)?;
        if r.entries.len() != idx.dimension() {
            return Err(Error::invalid(format!(
                "expected {} entries, found {}",
                idx.dimension(),
                r.entries.len()
            )));
        }
        let mut values = Vec::with_capacity(r.entries.len());
        for (pos, e) in r.entries.into_iter().enumerate() {
            let c = Coalition::from_indices(&e.coalition)?;
            if idx.index_of(c) != Some(pos) {
                return Err(Error::invalid(format!(
                    "entry {pos} has coalition {c}, which is not in canonical position"
                )));
            }
            values.push(e.value);
        }
        Ok(SetFunction {
            n: r.n,
            k: r.k,
            basis: r.basis,
            values,
        })
    }
}

fn check_full_order(f: &SetFunction) -> Result<()> {
    if f.k != f.n {
        return Err(Error::invalid(format!(
            "operation needs a full-order set function (k = n = {}), got k = {}",
            f.n, f.k
        )));
    }
    check_dense_size(f.n, f.k)
}

fn check_dense_size(n: usize, k: usize) -> Result<()> {
    if n > MAX_FULL_ORDER {
        return Err(Error::TooLarge {
            n,
            k,
            reason: format!("full-order transforms are limited to n <= {MAX_FULL_ORDER}"),
        });
    }
    Ok(())
}

/// Canonical values scattered into a mask-indexed table of length `2^n`.
fn to_dense(f: &SetFunction) -> Vec<f64> {
    let mut dense = vec![0.0; 1usize << f.n];
    for (c, v) in f.entries() {
        dense[c.mask() as usize] = v;
    }
    dense
}

fn from_dense(n: usize, basis: Basis, dense: &[f64]) -> SetFunction {
    SetFunction::from_fn(n, n, basis, |c| dense[c.mask() as usize]).expect("size checked by caller")
}

/// In-place subset-sum (zeta) transform over a mask-indexed table.
fn zeta(xs: &mut [f64]) {
    let mut bit = 1;
    while bit < xs.len() {
        for mask in 0..xs.len() {
            if mask & bit != 0 {
                xs[mask] += xs[mask ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// In-place inverse of [`zeta`].
fn moebius(xs: &mut [f64]) {
    let mut bit = 1;
    while bit < xs.len() {
        for mask in 0..xs.len() {
            if mask & bit != 0 {
                xs[mask] -= xs[mask ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// `m(A) = sum_{B ⊆ A} (-1)^{|A \ B|} mu(B)`.
pub fn mobius_from_capacity(mu: &SetFunction) -> Result<SetFunction> {
    mu.expect_basis(Basis::Capacity)?;
    check_full_order(mu)?;
    let mut dense = to_dense(mu);
    moebius(&mut dense);
    Ok(from_dense(mu.n, Basis::Moebius, &dense))
}

/// `mu(A) = sum_{B ⊆ A} m(B)`, evaluated on every non-empty coalition.
///
/// A `k`-additive input yields a full-order capacity.
pub fn capacity_from_mobius(m: &SetFunction) -> Result<SetFunction> {
    m.expect_basis(Basis::Moebius)?;
    check_dense_size(m.n, m.k)?;
    let mut dense = to_dense(m);
    zeta(&mut dense);
    Ok(from_dense(m.n, Basis::Capacity, &dense))
}

/// Shapley interaction indices of the game with Möbius coefficients `m`:
/// `I(A) = sum_{B ⊆ F \ A} m(A ∪ B) / (|B| + 1)`.
///
/// For a `k`-additive game only supersets of order at most `k` contribute,
/// so `I(A) = m(A)` whenever `|A| = k`.
pub fn shapley_from_mobius(m: &SetFunction) -> Result<SetFunction> {
    m.expect_basis(Basis::Moebius)?;
    let idx = CoalitionIndex::new(m.n, m.k)?;
    let mut out = vec![0.0; idx.dimension()];
    for (t, (coal, mt)) in m.entries().enumerate() {
        if mt == 0.0 {
            continue;
        }
        let size_t = coal.len();
        for sub in coal.subsets() {
            if sub.is_empty() {
                continue;
            }
            let pos = if sub == coal {
                t
            } else {
                idx.index_of(sub).expect("subset of a stored coalition")
            };
            out[pos] += mt / (size_t - sub.len() + 1) as f64;
        }
    }
    Ok(SetFunction {
        n: m.n,
        k: m.k,
        basis: Basis::Shapley,
        values: out,
    })
}

/// Inverse of [`shapley_from_mobius`].
///
/// The forward map is unit upper-triangular when coalitions are ordered by
/// size, so it is solved by back-substitution from the highest order down.
/// For `k = 2` this reduces to `m({i,j}) = I({i,j})` and
/// `m({i}) = I({i}) - ½ Σ_j I({i,j})`.
pub fn mobius_from_shapley(shapley: &SetFunction) -> Result<SetFunction> {
    shapley.expect_basis(Basis::Shapley)?;
    let idx = CoalitionIndex::new(shapley.n, shapley.k)?;
    let coalitions = shapley.coalitions();
    let mut pushed = vec![0.0; idx.dimension()];
    let mut m = vec![0.0; idx.dimension()];
    for pos in (0..coalitions.len()).rev() {
        let coal = coalitions[pos];
        let value = shapley.values[pos] - pushed[pos];
        m[pos] = value;
        if value == 0.0 || coal.len() == 1 {
            continue;
        }
        let size = coal.len();
        for sub in coal.subsets() {
            if sub.is_empty() || sub == coal {
                continue;
            }
            let q = idx.index_of(sub).expect("subset of a stored coalition");
            pushed[q] += value / (size - sub.len() + 1) as f64;
        }
    }
    Ok(SetFunction {
        n: shapley.n,
        k: shapley.k,
        basis: Basis::Moebius,
        values: m,
    })
}

fn check_unit_cube(x: &[f64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    for (feature, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitCube { feature, value });
        }
    }
    Ok(())
}

/// Choquet integral through the Möbius representation,
/// `C(x) = sum_T m(T) min_{i in T} x_i`.
pub fn choquet_mobius(m: &SetFunction, x: &[f64]) -> Result<f64> {
    m.expect_basis(Basis::Moebius)?;
    check_unit_cube(x, m.n)?;
    Ok(m.entries().map(|(c, v)| v * c.min_over(x)).sum())
}

/// Drops every Möbius coefficient of order above `k`.
///
/// Canonical order groups coalitions by size, so this is a prefix.
pub fn truncate_k_additive(m: &SetFunction, k: usize) -> Result<SetFunction> {
    m.expect_basis(Basis::Moebius)?;
    if k == 0 {
        return Err(Error::invalid("additivity order must be at least 1"));
    }
    let k = k.min(m.k);
    let dim = coalition::combinatorial_dimension(m.n, k)? as usize;
    Ok(SetFunction {
        n: m.n,
        k,
        basis: Basis::Moebius,
        values: m.values[..dim].to_vec(),
    })
}

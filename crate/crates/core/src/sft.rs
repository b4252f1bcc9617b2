//! String Fourier transform, the reflection θ and the convolution product.
//!
//! Bases are matched: the basis of `H₋` is `{θ(x_i)}`, so θ acts as complex
//! conjugation in coordinates and `H₋`, `H₊` share the index set `0..dim`.

use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, C64, ONE, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Operator on `H₋ ⊗ H₊`.
    MinusPlus,
    /// Operator on `H₊ ⊗ H₋`.
    PlusMinus,
}

impl Orientation {
    fn name(self) -> &'static str {
        match self {
            Orientation::MinusPlus => "minus_plus",
            Orientation::PlusMinus => "plus_minus",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    matrix: ComplexMatrix,
    dim_left: usize,
    dim_right: usize,
    orientation: Orientation,
}

impl BipartiteOperator {
    pub fn new(
        matrix: ComplexMatrix,
        dim_left: usize,
        dim_right: usize,
        orientation: Orientation,
    ) -> Result<Self> {
        let n = dim_left * dim_right;
        if dim_left == 0 || dim_right == 0 || matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix on a {dim_left}x{dim_right} bipartite space",
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { matrix, dim_left, dim_right, orientation })
    }

    pub fn minus_plus(matrix: ComplexMatrix, dim: usize) -> Result<Self> {
        Self::new(matrix, dim, dim, Orientation::MinusPlus)
    }

    pub fn plus_minus(matrix: ComplexMatrix, dim: usize) -> Result<Self> {
        Self::new(matrix, dim, dim, Orientation::PlusMinus)
    }

    pub fn identity(dim: usize, orientation: Orientation) -> Self {
        Self::new(ComplexMatrix::identity(dim * dim), dim, dim, orientation).unwrap()
    }

    /// `left ⊗ right` as a bipartite operator.
    pub fn product(left: &ComplexMatrix, right: &ComplexMatrix, orientation: Orientation) -> Result<Self> {
        Self::new(kron(left, right), left.rows(), right.rows(), orientation)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim_left(&self) -> usize {
        self.dim_left
    }

    pub fn dim_right(&self) -> usize {
        self.dim_right
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Same orientation and factor dims, new matrix.
    pub fn with_matrix(&self, matrix: ComplexMatrix) -> Result<Self> {
        Self::new(matrix, self.dim_left, self.dim_right, self.orientation)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self { matrix: self.matrix.scale_real(s), ..self.clone() }
    }

    pub fn expect(&self, orientation: Orientation) -> Result<()> {
        if self.orientation != orientation {
            return Err(Error::Orientation { expected: orientation.name(), got: self.orientation.name() });
        }
        Ok(())
    }
}

/// θ for a pair of matched Hilbert spaces of equal dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RieszMap {
    pub dim: usize,
}

impl RieszMap {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("Riesz map on a zero-dimensional space".into()));
        }
        Ok(Self { dim })
    }

    fn check_square_op(&self, t: &BipartiteOperator) -> Result<()> {
        if t.dim_left != self.dim || t.dim_right != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "operator on {}x{} factors, Riesz map of dim {}",
                t.dim_left, t.dim_right, self.dim
            )));
        }
        Ok(())
    }
}

pub fn theta_vec(v: &ComplexMatrix, r: &RieszMap) -> Result<ComplexMatrix> {
    if v.cols() != 1 || v.rows() != r.dim {
        return Err(Error::DimensionMismatch(format!(
            "vector {}x{} for Riesz map of dim {}",
            v.rows(),
            v.cols(),
            r.dim
        )));
    }
    Ok(v.conj())
}

/// θMθ for an operator on a single factor.
pub fn theta_single(m: &ComplexMatrix) -> ComplexMatrix {
    m.conj()
}

/// θ(T) = θ∘T∘θ with θ(y⊗x) = θ(x)⊗θ(y).
pub fn theta_op(t: &BipartiteOperator, r: &RieszMap) -> Result<BipartiteOperator> {
    r.check_square_op(t)?;
    let n = r.dim;
    let m = &t.matrix;
    let out = ComplexMatrix::from_fn(n * n, n * n, |row, col| {
        let (a, b) = (row / n, row % n);
        let (c, d) = (col / n, col % n);
        m[(b * n + a, d * n + c)].conj()
    });
    t.with_matrix(out)
}

/// Index realignment `out[(i,j),(i',j')] = m[(i',i),(j',j)]`.
fn realign(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for ip in 0..n {
        for i in 0..n {
            let row_src = ip * n + i;
            for jp in 0..n {
                for j in 0..n {
                    let z = m[(row_src, jp * n + j)];
                    if z != ZERO {
                        out[(i * n + j, ip * n + jp)] = z;
                    }
                }
            }
        }
    }
    out
}

/// Inverse of [`realign`]: `out[(p,q),(r,s)] = m[(q,s),(p,r)]`.
fn unrealign(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for q in 0..n {
        for s in 0..n {
            for p in 0..n {
                for r in 0..n {
                    out[(p * n + q, r * n + s)] = m[(q * n + s, p * n + r)];
                }
            }
        }
    }
    out
}

/// 𝔉ₛ: hom(H₋₊) → hom(H₊₋).
pub fn sft(t: &BipartiteOperator, r: &RieszMap) -> Result<BipartiteOperator> {
    t.expect(Orientation::MinusPlus)?;
    r.check_square_op(t)?;
    BipartiteOperator::plus_minus(realign(&t.matrix, r.dim), r.dim)
}

/// 𝔉ₛ⁻¹: hom(H₊₋) → hom(H₋₊).
pub fn sft_inverse(s: &BipartiteOperator, r: &RieszMap) -> Result<BipartiteOperator> {
    s.expect(Orientation::PlusMinus)?;
    r.check_square_op(s)?;
    BipartiteOperator::minus_plus(unrealign(&s.matrix, r.dim), r.dim)
}

/// Matrix of `Y: H₊₋ ⊗ H₊₋ → H₊₋`, `Y(x_a⊗y_b⊗x_c⊗y_d) = δ_bc x_a⊗y_d`.
pub fn y_map(r: &RieszMap) -> ComplexMatrix {
    let n = r.dim;
    let mut y = ComplexMatrix::zeros(n * n, n * n * n * n);
    for a in 0..n {
        for b in 0..n {
            for d in 0..n {
                y[(a * n + d, ((a * n + b) * n + b) * n + d)] = ONE;
            }
        }
    }
    y
}

fn check_conv_inputs(a: &BipartiteOperator, b: &BipartiteOperator, r: &RieszMap) -> Result<()> {
    a.expect(Orientation::PlusMinus)?;
    b.expect(Orientation::PlusMinus)?;
    r.check_square_op(a)?;
    r.check_square_op(b)
}

/// `A * B = Y (A ⊗ B) Y†`, evaluated by contracting the inner indices:
/// `(A*B)[(α,β),(α',β')] = Σ_{k,k'} A[(α,k),(α',k')] B[(k,β),(k',β')]`.
pub fn convolve(a: &BipartiteOperator, b: &BipartiteOperator, r: &RieszMap) -> Result<BipartiteOperator> {
    check_conv_inputs(a, b, r)?;
    let n = r.dim;
    let (am, bm) = (&a.matrix, &b.matrix);
    let mut out = ComplexMatrix::zeros(n * n, n * n);
    for al in 0..n {
        for alp in 0..n {
            for k in 0..n {
                for kp in 0..n {
                    let x = am[(al * n + k, alp * n + kp)];
                    if x == ZERO {
                        continue;
                    }
                    for be in 0..n {
                        for bep in 0..n {
                            out[(al * n + be, alp * n + bep)] += x * bm[(k * n + be, kp * n + bep)];
                        }
                    }
                }
            }
        }
    }
    BipartiteOperator::plus_minus(out, n)
}

/// Literal `Y (A ⊗ B) Y†`; quartic memory, meant for small cross-checks.
pub fn convolve_via_y(a: &BipartiteOperator, b: &BipartiteOperator, r: &RieszMap) -> Result<BipartiteOperator> {
    check_conv_inputs(a, b, r)?;
    let y = y_map(r);
    let ab = kron(&a.matrix, &b.matrix);
    BipartiteOperator::plus_minus(y.mul(&ab).mul(&y.dagger()), r.dim)
}

/// `u = Σ_i e_i ⊗ e_i`, the vector with `𝔉ₛ(I) = u u†`.
pub fn max_entangled(n: usize) -> ComplexMatrix {
    let mut u = ComplexMatrix::zeros(n * n, 1);
    for i in 0..n {
        u[(i * n + i, 0)] = ONE;
    }
    u
}

/// Evaluates Def. 2.2 literally on basis vectors: returns
/// `⟨θ(x')⊗x, T (y'⊗θ(y))⟩` for basis indices `x=i, y=j, x'=i', y'=j'`.
pub fn sft_entry_by_definition(t: &BipartiteOperator, i: usize, j: usize, ip: usize, jp: usize) -> C64 {
    let n = t.dim_left;
    // Bra θ(x_{i'}) ⊗ x_i and ket y_{j'} ⊗ θ(y_j) in H₋₊.
    let bra = kron(&ComplexMatrix::basis(n, ip).conj(), &ComplexMatrix::basis(n, i));
    let ket = kron(&ComplexMatrix::basis(n, jp), &ComplexMatrix::basis(n, j).conj());
    crate::linalg::inner(&bra, &t.matrix.mul(&ket)).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_spectrum;

    #[test]
    fn sft_of_identity_is_rank_one() {
        let r = RieszMap::new(2).unwrap();
        let s = sft(&BipartiteOperator::identity(2, Orientation::MinusPlus), &r).unwrap();
        let u = max_entangled(2);
        assert_eq!(s.matrix(), &u.mul(&u.dagger()));
        let ev = hermitian_spectrum(s.matrix());
        assert!((ev[3] - 2.0).abs() < 1e-14 && ev[0].abs() < 1e-14);
        let back = sft_inverse(&s, &r).unwrap();
        assert_eq!(back, BipartiteOperator::identity(2, Orientation::MinusPlus));
    }

    #[test]
    fn orientation_enforced() {
        let r = RieszMap::new(2).unwrap();
        let pm = BipartiteOperator::identity(2, Orientation::PlusMinus);
        assert!(matches!(sft(&pm, &r), Err(Error::Orientation { .. })));
        let mp = BipartiteOperator::identity(2, Orientation::MinusPlus);
        assert!(sft_inverse(&mp, &r).is_err());
        assert!(convolve(&mp, &pm, &r).is_err());
    }

    #[test]
    fn y_map_dim_one_is_identity() {
        assert_eq!(y_map(&RieszMap::new(1).unwrap()), ComplexMatrix::identity(1));
    }

    #[test]
    fn theta_vec_hand_cases() {
        let r = RieszMap::new(2).unwrap();
        let e1 = ComplexMatrix::basis(2, 0);
        assert_eq!(theta_vec(&e1, &r).unwrap(), e1);
        let ie2 = ComplexMatrix::basis(2, 1).scale(C64::i());
        assert_eq!(theta_vec(&ie2, &r).unwrap(), ComplexMatrix::basis(2, 1).scale(-C64::i()));
    }
}

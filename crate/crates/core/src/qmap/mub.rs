use super::{DensityEstimate, QmapError};
use crate::linalg::{c, pauli2, Axis, CMatrix, HermitianMatrix, C64};
use nalgebra::{DMatrix, DVector};

pub const OPERATOR_BASIS_ID: &str = "mub-16";

/// Commuting Pauli triples whose joint eigenbases form the five two-qubit MUBs.
/// Each entry lists the two generators; the third member is their product.
pub const MUB_TRIPLES: [[(Axis, Axis); 2]; 5] = [
    [(Axis::Z, Axis::I), (Axis::I, Axis::Z)],
    [(Axis::X, Axis::I), (Axis::I, Axis::X)],
    [(Axis::Y, Axis::I), (Axis::I, Axis::Y)],
    [(Axis::X, Axis::Y), (Axis::Y, Axis::Z)],
    [(Axis::Y, Axis::X), (Axis::Z, Axis::Y)],
];

const SIGNS: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

/// The 20 ideal preparations: basis b (0..5) and sign pattern s (0..4) sit at
/// label l = 4b + s + 1.
#[derive(Debug, Clone)]
pub struct PreparationSet {
    pub states: Vec<DensityEstimate>,
    pub vectors: Vec<DVector<C64>>,
    pub labels: Vec<usize>,
}

impl PreparationSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn basis_of(&self, label: usize) -> usize {
        (label - 1) / 4
    }
}

fn joint_projector(basis: usize, signs: (f64, f64)) -> CMatrix {
    let [(a1, b1), (a2, b2)] = MUB_TRIPLES[basis];
    let id = CMatrix::identity(4, 4);
    let p1 = &id + pauli2(a1, b1) * c(signs.0, 0.0);
    let p2 = &id + pauli2(a2, b2) * c(signs.1, 0.0);
    (p1 * p2) * c(0.25, 0.0)
}

fn unit_vector_of(projector: &CMatrix) -> DVector<C64> {
    let col = (0..projector.ncols())
        .max_by(|&a, &b| projector.column(a).norm().total_cmp(&projector.column(b).norm()))
        .expect("non-empty projector");
    let v = projector.column(col).into_owned();
    let pivot = v[col];
    let phase = pivot.conj() / pivot.norm();
    let v = v * phase;
    let n = v.norm();
    v / c(n, 0.0)
}

pub fn build_mub_preparations() -> PreparationSet {
    let mut states = Vec::with_capacity(20);
    let mut vectors = Vec::with_capacity(20);
    for basis in 0..MUB_TRIPLES.len() {
        for &signs in &SIGNS {
            let psi = unit_vector_of(&joint_projector(basis, signs));
            let rho = HermitianMatrix::outer(&psi);
            states.push(DensityEstimate::new(rho).expect("pure state is a valid density estimate"));
            vectors.push(psi);
        }
    }
    PreparationSet { states, vectors, labels: (1..=20).collect() }
}

/// Fixed operator basis {A_m} for χ matrices, with the vectorization matrix
/// V (columns vec(A_m)) and its inverse cached.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    pub id: String,
    pub elements: Vec<HermitianMatrix>,
    pub v: CMatrix,
    pub v_inv: CMatrix,
}

impl OperatorBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn from_elements(id: &str, elements: Vec<HermitianMatrix>) -> Result<Self, QmapError> {
        let d = elements.first().map(|e| e.dim()).unwrap_or(0);
        let n = d * d;
        if elements.len() != n {
            return Err(QmapError::RankDeficient { rank: elements.len(), expected: n });
        }
        let v = CMatrix::from_fn(n, n, |row, col| elements[col].matrix()[(row / d, row % d)]);
        let rank = hs_rank(&elements, 1e-10);
        if rank < n {
            return Err(QmapError::RankDeficient { rank, expected: n });
        }
        let v_inv = v.clone().try_inverse().ok_or(QmapError::RankDeficient { rank, expected: n })?;
        Ok(Self { id: id.to_string(), elements, v, v_inv })
    }
}

/// Numerical rank of the Hilbert–Schmidt Gram matrix of a set of Hermitian matrices.
pub(crate) fn hs_rank(elements: &[HermitianMatrix], tol: f64) -> usize {
    let n = elements.len();
    let gram = DMatrix::from_fn(n, n, |i, j| elements[i].inner(&elements[j]));
    let sv = gram.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > tol * top.max(1.0)).count()
}

pub fn build_operator_basis(preps: &PreparationSet) -> Result<OperatorBasis, QmapError> {
    let mut elements = Vec::with_capacity(16);
    for (idx, state) in preps.states.iter().enumerate() {
        let basis = idx / 4;
        let within = idx % 4;
        if basis == 0 || within < 3 {
            elements.push(state.matrix().clone());
        }
    }
    OperatorBasis::from_elements(OPERATOR_BASIS_ID, elements)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn overlap(a: &DVector<C64>, b: &DVector<C64>) -> f64 {
        a.dotc(b).norm_sqr()
    }

    #[test]
    fn first_state_is_up_up() {
        let p = build_mub_preparations();
        let m = p.states[0].matrix().matrix();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert!((m[(i, j)] - c(want, 0.0)).norm() < 1e-15);
            }
        }
        let down_down = p.states[3].matrix().matrix();
        assert!((down_down[(3, 3)].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlaps_are_mutually_unbiased() {
        let p = build_mub_preparations();
        for a in 0..20 {
            for b in 0..20 {
                let o = overlap(&p.vectors[a], &p.vectors[b]);
                let want = if a == b {
                    1.0
                } else if a / 4 == b / 4 {
                    0.0
                } else {
                    0.25
                };
                assert!((o - want).abs() < 1e-12, "overlap({a},{b}) = {o}");
            }
        }
    }

    #[test]
    fn preparations_span_operator_space() {
        let p = build_mub_preparations();
        let mats: Vec<_> = p.states.iter().map(|s| s.matrix().clone()).collect();
        assert_eq!(hs_rank(&mats, 1e-10), 16);
    }

    #[test]
    fn each_basis_diagonalizes_its_triple() {
        for (b, triple) in MUB_TRIPLES.iter().enumerate() {
            let [(a1, b1), (a2, b2)] = *triple;
            let third = pauli2(a1, b1) * pauli2(a2, b2);
            for (s, &(s1, s2)) in SIGNS.iter().enumerate() {
                let pr = joint_projector(b, (s1, s2));
                let e1 = (&pr * pauli2(a1, b1)).trace().re;
                let e2 = (&pr * pauli2(a2, b2)).trace().re;
                assert!((e1 - s1).abs() < 1e-12 && (e2 - s2).abs() < 1e-12, "basis {b} state {s}");
                assert!(((&pr * &third).trace().re.abs() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn operator_basis_is_idempotent_and_complete() {
        let p = build_mub_preparations();
        let basis = build_operator_basis(&p).unwrap();
        assert_eq!(basis.len(), 16);
        for a in &basis.elements {
            let sq = a.matrix() * a.matrix();
            assert!((sq - a.matrix()).norm() < 1e-12);
        }
        let sum: CMatrix = basis.elements[..4].iter().map(|a| a.matrix().clone()).sum();
        assert!((sum - CMatrix::identity(4, 4)).norm() < 1e-12);
        assert!((&basis.v * &basis.v_inv - CMatrix::identity(16, 16)).norm() < 1e-10);
    }

    #[test]
    fn rank_deficient_selection_is_rejected() {
        let p = build_mub_preparations();
        let mut elements: Vec<_> = p.states[..16].iter().map(|s| s.matrix().clone()).collect();
        elements[3] = p.states[16].matrix().clone();
        elements[15] = p.states[16].matrix().clone();
        assert!(matches!(
            OperatorBasis::from_elements("broken", elements),
            Err(QmapError::RankDeficient { .. })
        ));
    }
}

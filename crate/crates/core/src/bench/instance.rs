use crate::expr::{Constraint, Expr, Model, ObjSense, Objective, Sense, VarDecl};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Stream ids, one per generated quantity, so that changing how one is
/// drawn leaves the others intact.
const STREAM_ALPHA: u64 = 0;
const STREAM_D: u64 = 1;
const STREAM_B: u64 = 2;
const STREAM_A: u64 = 3;
const STREAM_BOUNDS: u64 = 4;
const STREAM_X: u64 = 5;

/// Sign convention for the linear cost `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostSign {
    /// `c = Σ_j d_j ∇m_j(x̃)`.
    #[default]
    Gradient,
    /// `c = -Σ_j d_j ∇m_j(x̃)`, making `x̃` a stationary point of the
    /// objective.
    Negated,
}

/// `min c·x + d·y  s.t.  A x + B y <= b,  xL <= x <= xU,  y_j = x^alpha_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyInstance {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub seed: u64,
    pub cost: CostSign,
    /// Sparse exponents `(variable, power)` of each monomial.
    pub alpha: Vec<Vec<(usize, u32)>>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    /// `r × n`, row major
    pub a: Vec<Vec<f64>>,
    /// `r × m`, row major
    pub b_mat: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub xl: Vec<f64>,
    pub xu: Vec<f64>,
    /// Point used to generate `c` and `b`; feasible with every row tight.
    pub x_tilde: Vec<f64>,
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// 0 with probability 0.3, otherwise uniform on [0, 1].
fn sparse_unit(r: &mut ChaCha8Rng) -> f64 {
    if r.gen::<f64>() < 0.3 {
        0.0
    } else {
        r.gen::<f64>()
    }
}

pub fn monomial_value(alpha: &[(usize, u32)], x: &[f64]) -> f64 {
    alpha.iter().map(|&(i, e)| x[i].powi(e as i32)).product()
}

pub fn monomial_gradient(alpha: &[(usize, u32)], x: &[f64], n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n];
    for (k, &(i, e)) in alpha.iter().enumerate() {
        let rest: f64 = alpha
            .iter()
            .enumerate()
            .filter(|&(l, _)| l != k)
            .map(|(_, &(j, f))| x[j].powi(f as i32))
            .product();
        g[i] += e as f64 * x[i].powi(e as i32 - 1) * rest;
    }
    g
}

/// Random polynomial instance of size `(n, m, r)`, deterministic in `seed`.
///
/// # Panics
/// Panics if `n < 3` (monomials may need three distinct variables) or
/// `m`, `r` are zero.
pub fn gen_poly_instance(n: usize, m: usize, r: usize, seed: u64) -> PolyInstance {
    gen_poly_instance_with(n, m, r, seed, CostSign::Gradient)
}

/// [`gen_poly_instance`] with a choice of cost sign.
pub fn gen_poly_instance_with(
    n: usize,
    m: usize,
    r: usize,
    seed: u64,
    cost: CostSign,
) -> PolyInstance {
    assert!(
        n >= 3 && m >= 1 && r >= 1,
        "instance size ({n}, {m}, {r}) too small"
    );
    let mut ra = rng(seed, STREAM_ALPHA);
    let alpha: Vec<Vec<(usize, u32)>> = (0..m)
        .map(|_| {
            let k = if ra.gen::<bool>() { 2 } else { 3 };
            let mut vars = rand::seq::index::sample(&mut ra, n, k).into_vec();
            vars.sort_unstable();
            vars.into_iter()
                .map(|i| (i, if ra.gen::<bool>() { 2 } else { 3 }))
                .collect()
        })
        .collect();
    let mut rd = rng(seed, STREAM_D);
    let d: Vec<f64> = (0..m).map(|_| sparse_unit(&mut rd)).collect();
    let mut rb = rng(seed, STREAM_B);
    let b_mat: Vec<Vec<f64>> = (0..r)
        .map(|_| (0..m).map(|_| sparse_unit(&mut rb)).collect())
        .collect();
    let mut ra2 = rng(seed, STREAM_A);
    let a: Vec<Vec<f64>> = (0..r)
        .map(|_| (0..n).map(|_| ra2.gen_range(-10.0..=10.0)).collect())
        .collect();
    let mut rbd = rng(seed, STREAM_BOUNDS);
    let mut xl = Vec::with_capacity(n);
    let mut xu = Vec::with_capacity(n);
    for _ in 0..n {
        xl.push(rbd.gen_range(0..=2) as f64);
        xu.push(rbd.gen_range(3..=4) as f64);
    }
    let mut rx = rng(seed, STREAM_X);
    let x_tilde: Vec<f64> = (0..n).map(|i| rx.gen_range(xl[i]..=xu[i])).collect();
    let y: Vec<f64> = alpha
        .iter()
        .map(|al| monomial_value(al, &x_tilde))
        .collect();
    let mut c = vec![0.0; n];
    for (j, al) in alpha.iter().enumerate() {
        for (ci, gi) in c.iter_mut().zip(monomial_gradient(al, &x_tilde, n)) {
            *ci += match cost {
                CostSign::Gradient => gi * d[j],
                CostSign::Negated => -gi * d[j],
            };
        }
    }
    let b = (0..r)
        .map(|i| {
            let ax: f64 = a[i].iter().zip(&x_tilde).map(|(p, q)| p * q).sum();
            let by: f64 = b_mat[i].iter().zip(&y).map(|(p, q)| p * q).sum();
            ax + by
        })
        .collect();
    PolyInstance {
        n,
        m,
        r,
        seed,
        cost,
        alpha,
        c,
        d,
        a,
        b_mat,
        b,
        xl,
        xu,
        x_tilde,
    }
}

impl PolyInstance {
    pub fn id(&self) -> String {
        let tag = match self.cost {
            CostSign::Gradient => "",
            CostSign::Negated => "_neg",
        };
        format!("n{}_m{}_r{}_s{}{tag}", self.n, self.m, self.r, self.seed)
    }

    pub fn y_of(&self, x: &[f64]) -> Vec<f64> {
        self.alpha.iter().map(|al| monomial_value(al, x)).collect()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        let y = self.y_of(x);
        dot(&self.c, x) + dot(&self.d, &y)
    }

    /// Row activities `A x + B y(x) - b`.
    pub fn residuals(&self, x: &[f64]) -> Vec<f64> {
        let y = self.y_of(x);
        (0..self.r)
            .map(|i| dot(&self.a[i], x) + dot(&self.b_mat[i], &y) - self.b[i])
            .collect()
    }

    fn monomial(&self, j: usize) -> Expr {
        Expr::product(
            self.alpha[j]
                .iter()
                .map(|&(i, e)| Expr::pow(Expr::var(i), e as f64))
                .collect(),
        )
    }

    fn linear(&self, xc: &[f64], yc: &[f64]) -> Expr {
        let mut items = Vec::new();
        for (i, &a) in xc.iter().enumerate() {
            if a != 0.0 {
                items.push(Expr::mul(Expr::num(a), Expr::var(i)));
            }
        }
        for (j, &b) in yc.iter().enumerate() {
            if b != 0.0 {
                items.push(Expr::mul(Expr::num(b), self.monomial(j)));
            }
        }
        Expr::sum(items)
    }

    pub fn to_model(&self) -> Model {
        let vars = (0..self.n)
            .map(|i| VarDecl {
                name: format!("x{}", i + 1),
                lo: self.xl[i],
                hi: self.xu[i],
                integer: false,
            })
            .collect();
        let constraints = (0..self.r)
            .map(|i| Constraint {
                name: format!("row{}", i + 1),
                body: self.linear(&self.a[i], &self.b_mat[i]),
                sense: Sense::Le,
                rhs: self.b[i],
            })
            .collect();
        Model {
            vars,
            objective: Some(Objective {
                sense: ObjSense::Min,
                expr: self.linear(&self.c, &self.d),
            }),
            constraints,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

use super::base::{build_base, scaled, sum_forms, univariate_kind, LinearForm, Relaxation};
use super::{RelaxConfig, RelaxError, Voxelizer};
use crate::envelopes::{pl_estimators, PiecewiseLinear, UnivariateKind};
use crate::expr::{ExprDag, Node, NodeId};
use crate::geometry::{
    corner_points, grid_cover_indexed, quickhull_points, AxisBox, AxisRegion, FacetSystem,
    Halfspace,
};
use crate::interval::{constraint_roots, BoundStore, Interval};
use crate::lp::{RowSense, Tag};
use crate::voxel::{
    approx_projection, boundary_voxelize, merge_rows, outer_approx_capped, quadtree_voxelize,
    uniform_grid, DagTester,
};
use rayon::prelude::*;

/// Cosine above which two rows over the same columns count as parallel.
const PARALLEL_COS: f64 = 1.0 - 1e-8;
/// Box budget of the interval-splitting voxelizer per product site.
const SPLIT_BUDGET: usize = 1 << 15;

/// How one operand of a product enters the hull.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// The operand itself, with `X_i` its two bounds.
    Identity { node: NodeId, bounds: Interval },
    /// A univariate function of `input`, sandwiched between piecewise
    /// linear estimators on uniform breakpoints.
    Function {
        node: NodeId,
        input: NodeId,
        kind: UnivariateKind,
        under: PiecewiseLinear,
        over: PiecewiseLinear,
    },
}

impl Factor {
    /// Node whose value is the hull coordinate `v_i`.
    pub fn target(&self) -> NodeId {
        match self {
            Factor::Identity { node, .. } => *node,
            Factor::Function { input, .. } => *input,
        }
    }

    /// The grid `X_i`.
    pub fn grid(&self) -> Vec<f64> {
        match self {
            Factor::Identity { bounds, .. } => vec![bounds.lo, bounds.hi],
            Factor::Function { under, .. } => under.breakpoints.clone(),
        }
    }

    /// `(u_i(v), w_i(v))` using the pieces of segment `k`.
    pub fn estimates(&self, k: usize, v: f64) -> (f64, f64) {
        match self {
            Factor::Identity { .. } => (v, v),
            Factor::Function { under, over, .. } => {
                (under.piece_value(k, v), over.piece_value(k, v))
            }
        }
    }
}

/// A product relation `out = f_1 · f_2`. Quotients `v = a/b` appear as
/// `a = v·b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSite {
    /// Product or quotient node that produced the site.
    pub node: NodeId,
    /// Node holding the product value.
    pub out: NodeId,
    pub operands: [NodeId; 2],
}

/// Product relations of the reachable binary products and quotients, in
/// node order.
pub fn product_sites(dag: &ExprDag) -> Vec<ProductSite> {
    let reach = dag.reachable();
    let mut out = Vec::new();
    for (id, n) in dag.nodes.iter().enumerate() {
        if !reach[id] {
            continue;
        }
        match n {
            Node::Mul(ch) if ch.len() == 2 => out.push(ProductSite {
                node: id,
                out: id,
                operands: [ch[0], ch[1]],
            }),
            Node::Div(a, b) => out.push(ProductSite {
                node: id,
                out: *a,
                operands: [id, *b],
            }),
            _ => {}
        }
    }
    out
}

/// Classifies an operand: univariate nonlinear functions become
/// [`Factor::Function`], anything else is kept as a scalar.
pub fn classify(
    dag: &ExprDag,
    store: &BoundStore,
    id: NodeId,
    n_b: usize,
) -> Result<Factor, RelaxError> {
    if let Some((kind, input)) = univariate_kind(dag.node(id)) {
        if !matches!(dag.node(input), Node::Const(_)) {
            let dom = store.get(input);
            if !dom.is_finite() {
                return Err(RelaxError::UnboundedOperand {
                    node: id,
                    operand: input,
                    bounds: dom,
                });
            }
            let (under, over) = pl_estimators(kind, dom, n_b)?;
            return Ok(Factor::Function {
                node: id,
                input,
                kind,
                under,
                over,
            });
        }
    }
    let bounds = store.get(id);
    if !bounds.is_finite() {
        return Err(RelaxError::UnboundedOperand {
            node: id,
            operand: id,
            bounds,
        });
    }
    Ok(Factor::Identity { node: id, bounds })
}

/// Hull of one product site in `(v_1, v_2, out)` space.
#[derive(Debug, Clone)]
pub struct ProductHull {
    pub site: ProductSite,
    pub factors: [Factor; 2],
    /// Outer approximation of the `(v_1, v_2)` domain.
    pub region: AxisRegion,
    /// Whether the configured voxelizer failed and the box was used.
    pub fell_back: bool,
    /// Lifted corner points.
    pub points: Vec<Vec<f64>>,
    pub facets: FacetSystem,
}

fn target_box(factors: &[Factor; 2], store: &BoundStore) -> AxisBox {
    let a = store.get(factors[0].target());
    let b = store.get(factors[1].target());
    AxisBox::rect(a.lo, a.hi, b.lo, b.hi)
}

fn voxelize(
    rel: &Relaxation,
    dag: &ExprDag,
    store: &BoundStore,
    factors: &[Factor; 2],
    cfg: &RelaxConfig,
) -> Result<AxisRegion, RelaxError> {
    let bx = target_box(factors, store);
    let t = [factors[0].target(), factors[1].target()];
    let region = match cfg.voxelizer {
        Voxelizer::BoundingBox => return Ok(AxisRegion::from_box(bx)),
        Voxelizer::Projection => {
            let (Some(ix), Some(iy)) = (rel.column(t[0]), rel.column(t[1])) else {
                return Ok(AxisRegion::from_box(bx));
            };
            if ix == iy || bx.lo[0] == bx.hi[0] || bx.lo[1] == bx.hi[1] {
                return Ok(AxisRegion::from_box(bx));
            }
            let p = approx_projection(&rel.sys, ix, iy, cfg.voxel.n_max, cfg.voxel.epsilon)?;
            boundary_voxelize(&p.outer, cfg.voxel.n_v)?
        }
        Voxelizer::Quadtree => {
            let tester = DagTester::new(dag, store, constraint_roots(dag), t.to_vec());
            let xs = uniform_grid(bx.lo[0], bx.hi[0], cfg.voxel.grid.0);
            let ys = uniform_grid(bx.lo[1], bx.hi[1], cfg.voxel.grid.1);
            quadtree_voxelize(&xs, &ys, |b| tester.test(b))
        }
        Voxelizer::Split => {
            let tester = DagTester::new(dag, store, constraint_roots(dag), t.to_vec());
            merge_rows(&outer_approx_capped(
                &bx,
                cfg.voxel.epsilon,
                SPLIT_BUDGET,
                |b| tester.test(b),
            ))
        }
    };
    // the region must stay inside the estimator domains
    let boxes: Vec<AxisBox> = region.boxes.iter().filter_map(|b| b.clip(&bx)).collect();
    if boxes.is_empty() {
        return Err(RelaxError::EmptyRegion(t));
    }
    Ok(AxisRegion { dim: 2, boxes })
}

/// Lifted points of the grid cover of `region`: at every corner of every
/// cell part, the four products of estimator values.
pub fn lift_corners(factors: &[Factor; 2], region: &AxisRegion) -> Vec<Vec<f64>> {
    let grid = [factors[0].grid(), factors[1].grid()];
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for (idx, part) in grid_cover_indexed(region, &grid) {
        for c in corner_points(&part).points {
            let (u1, w1) = factors[0].estimates(idx[0], c[0]);
            let (u2, w2) = factors[1].estimates(idx[1], c[1]);
            for t in [u1 * u2, u1 * w2, w1 * u2, w1 * w2] {
                let p = vec![c[0], c[1], t];
                if !pts.contains(&p) {
                    pts.push(p);
                }
            }
        }
    }
    pts
}

/// Outer approximation, grid cover, corner lifting and 3-D hull for one
/// product site. Voxelizer failures fall back to the bounding box.
pub fn product_hull(
    rel: &Relaxation,
    dag: &ExprDag,
    store: &BoundStore,
    site: &ProductSite,
    cfg: &RelaxConfig,
) -> Result<ProductHull, RelaxError> {
    let factors = [
        classify(dag, store, site.operands[0], cfg.n_b)?,
        classify(dag, store, site.operands[1], cfg.n_b)?,
    ];
    let (region, fell_back) = match voxelize(rel, dag, store, &factors, cfg) {
        Ok(r) => (r, false),
        Err(e) => {
            log::warn!(
                "node {}: voxelization failed ({e}), using the bounding box",
                site.node
            );
            (AxisRegion::from_box(target_box(&factors, store)), true)
        }
    };
    let points = lift_corners(&factors, &region);
    let raw = quickhull_points(3, &points)?;
    let facets = FacetSystem {
        dim: 3,
        inequalities: raw
            .inequalities
            .iter()
            .map(|h| support(h, &points))
            .collect(),
        equalities: raw.equalities.iter().map(clean).collect(),
    };
    Ok(ProductHull {
        site: site.clone(),
        factors,
        region,
        fell_back,
        points,
        facets,
    })
}

fn clean(h: &Halfspace) -> Halfspace {
    let h = h.normalized();
    let m = h.normal.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    Halfspace {
        normal: h
            .normal
            .iter()
            .map(|&a| if a.abs() < 1e-12 * m { 0.0 } else { a })
            .collect(),
        offset: h.offset,
    }
}

/// Cleans tiny coefficients and moves the offset out to the largest value
/// over the points, so every lifted point satisfies the facet exactly.
fn support(h: &Halfspace, pts: &[Vec<f64>]) -> Halfspace {
    let mut h = clean(h);
    for p in pts {
        let v: f64 = h.normal.iter().zip(p).map(|(a, x)| a * x).sum();
        h.offset = h.offset.max(v);
    }
    h
}

fn facet_form(rel: &Relaxation, dag: &ExprDag, hull: &ProductHull, h: &Halfspace) -> LinearForm {
    let v1 = rel.linear_form(dag, hull.factors[0].target());
    let v2 = rel.linear_form(dag, hull.factors[1].target());
    let out = rel.linear_form(dag, hull.site.out);
    sum_forms(&[
        scaled(&v1, h.normal[0]),
        scaled(&v2, h.normal[1]),
        scaled(&out, h.normal[2]),
    ])
}

/// A row rewritten as one or two `a·x <= b` rows.
fn as_le(coefs: &[(usize, f64)], sense: RowSense, rhs: f64) -> Vec<(Vec<(usize, f64)>, f64)> {
    let neg = || {
        (
            coefs.iter().map(|&(j, a)| (j, -a)).collect::<Vec<_>>(),
            -rhs,
        )
    };
    match sense {
        RowSense::Le => vec![(coefs.to_vec(), rhs)],
        RowSense::Ge => vec![neg()],
        RowSense::Eq => vec![(coefs.to_vec(), rhs), neg()],
    }
}

fn dominated(rel: &Relaxation, coefs: &[(usize, f64)], rhs: f64) -> bool {
    let norm = coefs.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
    if norm == 0.0 {
        return true;
    }
    rel.sys.rows.iter().any(|r| {
        r.coefs.len() == coefs.len()
            && r.coefs.iter().zip(coefs).all(|(a, b)| a.0 == b.0)
            && as_le(&r.coefs, r.sense, r.rhs).into_iter().any(|(rc, rr)| {
                let rn = rc.iter().map(|c| c.1 * c.1).sum::<f64>().sqrt();
                let dot: f64 = rc.iter().zip(coefs).map(|(a, b)| a.1 * b.1).sum();
                dot / (rn * norm) > PARALLEL_COS
                    && rr / rn <= rhs / norm + 1e-12 * (1.0 + (rhs / norm).abs())
            })
    })
}

/// Adds the facets of `hull` as rows, skipping facets parallel to an
/// existing row that is at least as tight. Returns the number added.
pub fn inject_hull(rel: &mut Relaxation, dag: &ExprDag, hull: &ProductHull, name: &str) -> usize {
    let mut added = 0;
    let mut push = |rel: &mut Relaxation, h: &Halfspace, sense: RowSense| {
        let (coefs, k) = facet_form(rel, dag, hull, h);
        let coefs = crate::lp::merge_coefs(coefs);
        let rhs = h.offset - k;
        if as_le(&coefs, sense, rhs)
            .iter()
            .all(|(c, r)| dominated(rel, c, *r))
        {
            return;
        }
        rel.sys.add_row(
            format!("vr_{name}_{added}"),
            coefs,
            sense,
            rhs,
            Tag::HullFacet,
        );
        added += 1;
    };
    for h in &hull.facets.inequalities {
        push(rel, h, RowSense::Le);
    }
    for h in &hull.facets.equalities {
        // the affine hull may be only approximately flat; use the point range
        let vals: Vec<f64> = hull
            .points
            .iter()
            .map(|p| h.normal.iter().zip(p).map(|(a, x)| a * x).sum())
            .collect();
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        push(
            rel,
            &Halfspace {
                normal: h.normal.clone(),
                offset: hi,
            },
            RowSense::Le,
        );
        push(
            rel,
            &Halfspace {
                normal: h.normal.clone(),
                offset: lo,
            },
            RowSense::Ge,
        );
    }
    added
}

/// Voxelization relaxation of one product site added to `rel`. Returns the
/// number of rows added.
pub fn relax_product_node(
    rel: &mut Relaxation,
    dag: &ExprDag,
    store: &BoundStore,
    site: &ProductSite,
    cfg: &RelaxConfig,
) -> Result<usize, RelaxError> {
    let hull = product_hull(rel, dag, store, site, cfg)?;
    let names = dag.node_names();
    Ok(inject_hull(rel, dag, &hull, &names[site.node]))
}

/// Base relaxation plus the hull of every product site. All sites are
/// voxelized against the same snapshot of the base system; their rows are
/// added in node order.
pub fn build_vr(
    dag: &ExprDag,
    store: &BoundStore,
    cfg: &RelaxConfig,
) -> Result<Relaxation, RelaxError> {
    let mut rel = build_base(dag, store, cfg)?;
    let sites = product_sites(dag);
    let hulls: Vec<Result<ProductHull, RelaxError>> = sites
        .par_iter()
        .map(|s| product_hull(&rel, dag, store, s, cfg))
        .collect();
    let names = dag.node_names();
    for h in hulls {
        let h = h?;
        inject_hull(&mut rel, dag, &h, &names[h.site.node]);
    }
    Ok(rel)
}

//! Outer bounds on the range of a rational function over a box intersected
//! with linear sum constraints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::expr::{CompiledPoly, ParamId, RationalFunction};
use crate::interval::Interval;

/// Slack used when testing linear constraints in floating point.
const FEAS_EPS: f64 = 1e-12;

/// `Σ_{v ∈ vars} x_v ∈ sum`, over box indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexConstraint {
    pub vars: Vec<usize>,
    pub sum: Interval,
}

/// A rational function lowered for repeated interval evaluation, with the
/// numerators `N_v D - N D_v` of its partial derivatives for monotonicity
/// tests.
#[derive(Clone, Debug)]
pub struct CompiledExpression {
    vars: Vec<ParamId>,
    num: CompiledPoly,
    den: CompiledPoly,
    slopes: Vec<CompiledPoly>,
    constant: Option<f64>,
}

impl CompiledExpression {
    pub fn new(f: &RationalFunction) -> Self {
        let vars: Vec<ParamId> = f.params().into_iter().collect();
        let num = CompiledPoly::new(f.num(), &vars);
        let den = CompiledPoly::new(f.den(), &vars);
        let slopes = vars
            .iter()
            .map(|v| {
                let g = f
                    .num()
                    .derivative(v)
                    .mul(f.den())
                    .sub(&f.num().mul(&f.den().derivative(v)));
                CompiledPoly::new(&g, &vars)
            })
            .collect();
        let constant = f.as_constant().map(|c| crate::expr::coeff_to_f64(&c));
        CompiledExpression {
            vars,
            num,
            den,
            slopes,
            constant,
        }
    }

    pub fn vars(&self) -> &[ParamId] {
        &self.vars
    }

    pub fn eval(&self, x: &[f64]) -> Option<f64> {
        let d = self.den.eval(x);
        if d.abs() <= crate::expr::SINGULAR_TOLERANCE {
            None
        } else {
            Some(self.num.eval(x) / d)
        }
    }

    /// Partial derivatives with respect to [`vars`](Self::vars) at `x`, or
    /// `None` at a pole.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let d = self.den.eval(x);
        if d.abs() <= crate::expr::SINGULAR_TOLERANCE {
            return None;
        }
        Some(self.slopes.iter().map(|g| g.eval(x) / (d * d)).collect())
    }

    /// Enclosure of the range over `x`. Variables on which the function is
    /// monotone are pinned to the endpoint that matters for `dir`.
    fn enclose(&self, x: &[Interval], dir: Dir) -> Interval {
        let d = self.den.eval_interval(x);
        let mut pinned = x.to_vec();
        // Monotonicity needs a denominator of constant sign.
        let passes = if d.contains_zero() { 0 } else { 2 };
        for _ in 0..passes {
            let mut changed = false;
            for (v, g) in self.slopes.iter().enumerate() {
                if pinned[v].width() == 0.0 {
                    continue;
                }
                let s = g.eval_interval(&pinned);
                let increasing = if s.lo >= 0.0 {
                    true
                } else if s.hi <= 0.0 {
                    false
                } else {
                    continue;
                };
                let at_lo = increasing == (dir == Dir::Min);
                let end = if at_lo { pinned[v].lo } else { pinned[v].hi };
                pinned[v] = Interval::point(end);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        self.num.eval_interval(&pinned) / self.den.eval_interval(&pinned)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Min,
    Max,
}

/// Shrinks `b` to the points that can satisfy `cons`; `false` if none can.
fn contract(b: &mut [Interval], cons: &[SimplexConstraint]) -> bool {
    for _ in 0..3 {
        for c in cons {
            let lo_sum: f64 = c.vars.iter().map(|&v| b[v].lo).sum();
            let hi_sum: f64 = c.vars.iter().map(|&v| b[v].hi).sum();
            if lo_sum > c.sum.hi + FEAS_EPS || hi_sum < c.sum.lo - FEAS_EPS {
                return false;
            }
            for &v in &c.vars {
                let others_lo = lo_sum - b[v].lo;
                let others_hi = hi_sum - b[v].hi;
                let lo = b[v].lo.max(c.sum.lo - others_hi - FEAS_EPS);
                let hi = b[v].hi.min(c.sum.hi - others_lo + FEAS_EPS);
                if lo > hi {
                    return false;
                }
                b[v] = Interval::new(lo, hi);
            }
        }
    }
    true
}

/// A point of `b` satisfying `cons`, found by shifting the midpoint.
fn feasible_point(b: &[Interval], cons: &[SimplexConstraint]) -> Option<Vec<f64>> {
    let mut x: Vec<f64> = b.iter().map(|i| i.mid()).collect();
    for _ in 0..4 {
        for c in cons {
            let s: f64 = c.vars.iter().map(|&v| x[v]).sum();
            if s < c.sum.lo {
                let need = c.sum.lo - s;
                let room: f64 = c.vars.iter().map(|&v| b[v].hi - x[v]).sum();
                if room <= 0.0 {
                    return None;
                }
                let t = (need / room).min(1.0);
                for &v in &c.vars {
                    x[v] += t * (b[v].hi - x[v]);
                }
            } else if s > c.sum.hi {
                let need = s - c.sum.hi;
                let room: f64 = c.vars.iter().map(|&v| x[v] - b[v].lo).sum();
                if room <= 0.0 {
                    return None;
                }
                let t = (need / room).min(1.0);
                for &v in &c.vars {
                    x[v] -= t * (x[v] - b[v].lo);
                }
            }
        }
    }
    let ok = cons.iter().all(|c| {
        let s: f64 = c.vars.iter().map(|&v| x[v]).sum();
        s >= c.sum.lo - FEAS_EPS && s <= c.sum.hi + FEAS_EPS
    }) && x.iter().zip(b).all(|(v, i)| i.contains(*v));
    ok.then_some(x)
}

struct Node {
    key: f64,
    b: Vec<Interval>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Reversed so the max-heap pops the smallest key.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key)
    }
}

/// Branch-and-bound settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BnbConfig {
    /// Sub-boxes processed per bound direction.
    pub max_boxes: usize,
    /// Stop once the certified gap is below `tolerance · max(1, |value|)`.
    pub tolerance: f64,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            max_boxes: 4096,
            tolerance: 1e-4,
        }
    }
}

/// Outer enclosure of `{ f(x) : x ∈ region }`.
///
/// `region` holds one interval per entry of `box_vars`; `map[i]` is the
/// index in `region` of the expression's i-th variable. When the
/// constraints make the region empty the constraints are dropped.
pub(crate) fn range(
    f: &CompiledExpression,
    region: &[Interval],
    map: &[usize],
    cons: &[SimplexConstraint],
    cfg: BnbConfig,
) -> Interval {
    if let Some(c) = f.constant {
        return Interval::point(c);
    }
    let mut root = region.to_vec();
    let cons = if contract(&mut root, cons) {
        cons
    } else {
        root = region.to_vec();
        &[]
    };
    let lo = search(f, &root, map, cons, cfg, Dir::Min);
    let hi = search(f, &root, map, cons, cfg, Dir::Max);
    Interval::new(lo.min(hi), hi.max(lo))
}

/// Lower (`Min`) or upper (`Max`) bound of `f` over the region.
fn search(
    f: &CompiledExpression,
    root: &[Interval],
    map: &[usize],
    cons: &[SimplexConstraint],
    cfg: BnbConfig,
    dir: Dir,
) -> f64 {
    let sign = if dir == Dir::Min { 1.0 } else { -1.0 };
    let project = |b: &[Interval]| -> Vec<Interval> { map.iter().map(|&i| b[i]).collect() };
    let key_of = |b: &[Interval]| -> f64 {
        let e = f.enclose(&project(b), dir);
        if dir == Dir::Min {
            e.lo
        } else {
            -e.hi
        }
    };
    let sample = |b: &[Interval]| -> Option<f64> {
        let x = feasible_point(b, cons)?;
        let xs: Vec<f64> = map.iter().map(|&i| x[i]).collect();
        f.eval(&xs).map(|v| sign * v)
    };

    let mut best = sample(root).unwrap_or(f64::INFINITY);
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        key: key_of(root),
        b: root.to_vec(),
    });
    let mut processed = 0;
    while let Some(node) = heap.pop() {
        let gap_ok = best - node.key <= cfg.tolerance * best.abs().max(1.0);
        if gap_ok || processed >= cfg.max_boxes {
            heap.push(node);
            break;
        }
        processed += 1;
        let widest = map
            .iter()
            .copied()
            .max_by(|&a, &b| node.b[a].width().total_cmp(&node.b[b].width()))
            .filter(|&v| node.b[v].width() > 0.0);
        let Some(v) = widest else {
            // A single point: its key is its exact value.
            best = best.min(node.key);
            continue;
        };
        let mid = node.b[v].mid();
        for half in [Interval::new(node.b[v].lo, mid), Interval::new(mid, node.b[v].hi)] {
            let mut child = node.b.clone();
            child[v] = half;
            if !contract(&mut child, cons) {
                continue;
            }
            if let Some(s) = sample(&child) {
                best = best.min(s);
            }
            let key = key_of(&child);
            if key < best {
                heap.push(Node { key, b: child });
            }
        }
    }
    let frontier = heap.peek().map(|n| n.key).unwrap_or(f64::INFINITY);
    sign * frontier.min(best)
}

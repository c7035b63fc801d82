use super::Verdict;
use crate::geometry::{AxisBox, AxisRegion};

/// Recursive bisection of `start` into certified-inside boxes and leaves of
/// diameter below `eps`; boxes certified outside are dropped.
pub fn outer_approx(start: &AxisBox, eps: f64, test: impl Fn(&AxisBox) -> Verdict) -> AxisRegion {
    outer_approx_capped(start, eps, usize::MAX, test)
}

/// [`outer_approx`] that stops splitting once `max_boxes` boxes are kept or
/// pending; pending boxes are then kept as they are.
pub fn outer_approx_capped(
    start: &AxisBox,
    eps: f64,
    max_boxes: usize,
    test: impl Fn(&AxisBox) -> Verdict,
) -> AxisRegion {
    let d = start.dim();
    let mut kept = Vec::new();
    let mut stack = vec![start.clone()];
    while let Some(b) = stack.pop() {
        if kept.len() + stack.len() >= max_boxes {
            log::debug!(
                "box budget {max_boxes} reached, keeping {} undecided boxes",
                stack.len() + 1
            );
            kept.push(b);
            kept.append(&mut stack);
            break;
        }
        match test(&b) {
            Verdict::Inside => {
                kept.push(b);
                continue;
            }
            Verdict::Outside => continue,
            Verdict::Unknown => {}
        }
        if b.diameter() >= eps {
            // halve every axis with positive width
            let mut parts = vec![b.clone()];
            for i in 0..d {
                if b.hi[i] <= b.lo[i] {
                    continue;
                }
                let m = 0.5 * (b.lo[i] + b.hi[i]);
                parts = parts
                    .into_iter()
                    .flat_map(|p| {
                        let mut a = p.clone();
                        let mut c = p;
                        a.hi[i] = m;
                        c.lo[i] = m;
                        [a, c]
                    })
                    .collect();
            }
            stack.extend(parts);
        } else {
            kept.push(b);
        }
    }
    AxisRegion {
        dim: d,
        boxes: kept,
    }
}

/// Merges boxes of a 2-D region that share a row (equal y-extent) and
/// touch or overlap in x. The union is unchanged.
pub fn merge_rows(r: &AxisRegion) -> AxisRegion {
    if r.dim != 2 {
        return r.clone();
    }
    let mut boxes = r.boxes.clone();
    boxes.sort_by(|a, b| {
        (a.lo[1], a.hi[1], a.lo[0])
            .partial_cmp(&(b.lo[1], b.hi[1], b.lo[0]))
            .expect("finite coordinates")
    });
    let mut out: Vec<AxisBox> = Vec::with_capacity(boxes.len());
    for b in boxes {
        match out.last_mut() {
            Some(l) if l.lo[1] == b.lo[1] && l.hi[1] == b.hi[1] && b.lo[0] <= l.hi[0] => {
                l.hi[0] = l.hi[0].max(b.hi[0]);
            }
            _ => out.push(b),
        }
    }
    AxisRegion { dim: 2, boxes: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(c: [f64; 3]) -> impl Fn(&AxisBox) -> Verdict {
        move |b: &AxisBox| {
            // c0 x + c1 y + c2 <= 0 with c0, c1 >= 0
            let lo = c[0] * b.lo[0] + c[1] * b.lo[1] + c[2];
            let hi = c[0] * b.hi[0] + c[1] * b.hi[1] + c[2];
            if hi <= 0.0 {
                Verdict::Inside
            } else if lo > 0.0 {
                Verdict::Outside
            } else {
                Verdict::Unknown
            }
        }
    }

    #[test]
    fn certified_inside_is_one_box() {
        let r = outer_approx(
            &AxisBox::rect(0.0, 1.0, 0.0, 1.0),
            0.1,
            lin([1.0, 0.0, -2.0]),
        );
        assert_eq!(r.boxes.len(), 1);
    }

    #[test]
    fn certified_outside_is_empty() {
        let r = outer_approx(
            &AxisBox::rect(0.0, 1.0, 0.0, 1.0),
            0.1,
            lin([1.0, 0.0, 5.0]),
        );
        assert!(r.is_empty());
    }
}

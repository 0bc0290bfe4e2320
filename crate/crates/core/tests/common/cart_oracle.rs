//! Exhaustive-split single-target Gini CART, written directly from the
//! textbook definition with exact rational arithmetic.

use num_rational::Ratio;

type Q = Ratio<i128>;

#[derive(Debug)]
pub enum OracleNode {
    Leaf(usize),
    Split { slot: usize, categorical: bool, value: f64, left: Box<OracleNode>, right: Box<OracleNode> },
}

pub struct OracleData<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [usize],
    pub categorical: &'a [bool],
    pub classes: usize,
}

fn gini(data: &OracleData, idx: &[usize]) -> Q {
    let n = idx.len() as i128;
    let mut g = Q::from_integer(1);
    for k in 0..data.classes {
        let c = idx.iter().filter(|&&i| data.y[i] == k).count() as i128;
        g -= Q::new(c, n) * Q::new(c, n);
    }
    g
}

fn majority(data: &OracleData, idx: &[usize]) -> usize {
    let count = |k: usize| idx.iter().filter(|&&i| data.y[i] == k).count();
    (0..data.classes).fold(0, |best, k| if count(k) > count(best) { k } else { best })
}

fn goes_left(categorical: bool, value: f64, x: f64) -> bool {
    if categorical {
        x == value
    } else {
        x <= value
    }
}

fn build(data: &OracleData, idx: Vec<usize>, depth: usize, max_depth: usize, min_leaf: usize) -> OracleNode {
    let parent = gini(data, &idx);
    if parent == Q::from_integer(0) || depth >= max_depth || idx.len() < 2 * min_leaf {
        return OracleNode::Leaf(majority(data, &idx));
    }
    let n = idx.len() as i128;
    let mut best: Option<(Q, usize, f64)> = None;
    for slot in 0..data.categorical.len() {
        let mut values: Vec<f64> = idx.iter().map(|&i| data.x[i][slot]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let cat = data.categorical[slot];
        let candidates: Vec<f64> =
            if cat { values.clone() } else { values.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect() };
        for v in candidates {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| goes_left(cat, v, data.x[i][slot]));
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let weighted =
                Q::new(l.len() as i128, n) * gini(data, &l) + Q::new(r.len() as i128, n) * gini(data, &r);
            if best.as_ref().is_none_or(|b| weighted < b.0) {
                best = Some((weighted, slot, v));
            }
        }
    }
    match best {
        Some((w, slot, value)) if w < parent => {
            let cat = data.categorical[slot];
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| goes_left(cat, value, data.x[i][slot]));
            OracleNode::Split {
                slot,
                categorical: cat,
                value,
                left: Box::new(build(data, l, depth + 1, max_depth, min_leaf)),
                right: Box::new(build(data, r, depth + 1, max_depth, min_leaf)),
            }
        }
        _ => OracleNode::Leaf(majority(data, &idx)),
    }
}

pub fn fit(data: &OracleData, max_depth: usize, min_leaf: usize) -> OracleNode {
    build(data, (0..data.y.len()).collect(), 0, max_depth, min_leaf)
}

impl OracleNode {
    pub fn predict(&self, x: &[f64]) -> usize {
        match self {
            OracleNode::Leaf(k) => *k,
            OracleNode::Split { slot, categorical, value, left, right } => {
                if goes_left(*categorical, *value, x[*slot]) {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            OracleNode::Leaf(_) => 1,
            OracleNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

//! Histogram CART trees shared by the tree, forest and boosting estimators.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{finish, EstimatorSpec, Predictions};
use crate::error::{LearnError, Result};
use crate::matrix::Matrix;
use crate::task::Targets;

/// Features quantized to at most 256 bins. Bin `b` of feature `f` holds the
/// values `x` with `thresholds[f][b-1] < x ≤ thresholds[f][b]`.
pub(crate) struct Binned {
    n: usize,
    d: usize,
    /// Column-major bin codes.
    codes: Vec<u8>,
    thresholds: Vec<Vec<f64>>,
}

impl Binned {
    pub(crate) fn new(x: &Matrix, max_bins: usize) -> Result<Self> {
        if !(2..=256).contains(&max_bins) {
            return Err(LearnError::Invalid(format!("max_bins {max_bins} outside 2..=256")));
        }
        let (n, d) = (x.rows(), x.cols());
        let mut codes = vec![0u8; n * d];
        let mut thresholds = Vec::with_capacity(d);
        for f in 0..d {
            let mut uniq: Vec<f64> = (0..n).map(|i| x.row(i)[f]).collect();
            uniq.sort_by(f64::total_cmp);
            uniq.dedup();
            let cuts: Vec<usize> = if uniq.len() <= max_bins {
                (1..uniq.len()).collect()
            } else {
                let mut c: Vec<usize> = (1..max_bins).map(|b| b * uniq.len() / max_bins).collect();
                c.dedup();
                c
            };
            let t: Vec<f64> = cuts.iter().map(|&j| 0.5 * (uniq[j - 1] + uniq[j])).collect();
            for i in 0..n {
                codes[f * n + i] = t.partition_point(|&v| v < x.row(i)[f]) as u8;
            }
            thresholds.push(t);
        }
        Ok(Self { n, d, codes, thresholds })
    }

    fn code(&self, f: usize, i: usize) -> usize {
        self.codes[f * self.n + i] as usize
    }

    pub(crate) fn rows(&self) -> usize {
        self.n
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) enum Node {
    Leaf(Vec<f64>),
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub(crate) fn leaf(&self, row: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.nodes.len()
    }
}

/// Split quality: Gini impurity on classes, or squared error on real
/// responses.
pub(crate) enum Criterion<'a> {
    Gini { y: &'a [usize], n_classes: usize },
    Variance { y: &'a [f64] },
}

pub(crate) struct Growth {
    pub max_depth: usize,
    /// Minimum total sample weight per leaf.
    pub min_leaf: f64,
    /// Features tried per split; all when `>= d`.
    pub max_features: usize,
}

pub(crate) fn grow(
    b: &Binned,
    crit: &Criterion<'_>,
    weights: &[f64],
    growth: &Growth,
    rng: &mut ChaCha8Rng,
    leaf: &dyn Fn(&[usize]) -> Vec<f64>,
) -> Tree {
    let idx: Vec<usize> = (0..b.n).filter(|&i| weights[i] > 0.0).collect();
    let mut tree = Tree { nodes: Vec::new() };
    let mut g = Grower { b, crit, weights, growth, rng, leaf, tree: &mut tree };
    g.node(idx, 0);
    tree
}

struct Grower<'a, 'b> {
    b: &'a Binned,
    crit: &'a Criterion<'a>,
    weights: &'a [f64],
    growth: &'a Growth,
    rng: &'b mut ChaCha8Rng,
    leaf: &'a dyn Fn(&[usize]) -> Vec<f64>,
    tree: &'b mut Tree,
}

struct Best {
    gain: f64,
    feature: usize,
    bin: usize,
}

impl Grower<'_, '_> {
    fn node(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let at = self.tree.nodes.len();
        self.tree.nodes.push(Node::Leaf(Vec::new()));
        let split = if depth < self.growth.max_depth { self.best_split(&idx) } else { None };
        match split {
            None => self.tree.nodes[at] = Node::Leaf((self.leaf)(&idx)),
            Some(best) => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.b.code(best.feature, i) <= best.bin);
                let left = self.node(l, depth + 1);
                let right = self.node(r, depth + 1);
                let threshold = self.b.thresholds[best.feature][best.bin];
                self.tree.nodes[at] = Node::Split { feature: best.feature, threshold, left, right };
            }
        }
        at
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.b.d;
        if self.growth.max_features >= d {
            (0..d).collect()
        } else {
            let mut f = sample(self.rng, d, self.growth.max_features.max(1)).into_vec();
            f.sort_unstable();
            f
        }
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Best> {
        let w = self.weights;
        let total: f64 = idx.iter().map(|&i| w[i]).sum();
        if total < 2.0 * self.growth.min_leaf {
            return None;
        }
        let features = self.candidate_features();
        let mut best: Option<Best> = None;
        let min_gain = 1e-12 * total;
        match *self.crit {
            Criterion::Gini { y, n_classes: k } => {
                let mut counts = vec![0.0; k];
                for &i in idx {
                    counts[y[i]] += w[i];
                }
                if counts.iter().filter(|&&c| c > 0.0).count() < 2 {
                    return None;
                }
                let parent: f64 = counts.iter().map(|c| c * c).sum::<f64>() / total;
                for f in features {
                    let nb = self.b.thresholds[f].len() + 1;
                    let mut hist = vec![0.0; nb * k];
                    for &i in idx {
                        hist[self.b.code(f, i) * k + y[i]] += w[i];
                    }
                    let mut left = vec![0.0; k];
                    let mut wl = 0.0;
                    for bin in 0..nb - 1 {
                        for c in 0..k {
                            left[c] += hist[bin * k + c];
                        }
                        wl += hist[bin * k..(bin + 1) * k].iter().sum::<f64>();
                        let wr = total - wl;
                        if wl < self.growth.min_leaf || wr < self.growth.min_leaf || wl <= 0.0 || wr <= 0.0 {
                            continue;
                        }
                        let sl: f64 = left.iter().map(|c| c * c).sum();
                        let sr: f64 = left.iter().zip(&counts).map(|(l, c)| (c - l) * (c - l)).sum();
                        let gain = sl / wl + sr / wr - parent;
                        consider(&mut best, gain, min_gain, f, bin);
                    }
                }
            }
            Criterion::Variance { y } => {
                let sum: f64 = idx.iter().map(|&i| w[i] * y[i]).sum();
                let parent = sum * sum / total;
                for f in features {
                    let nb = self.b.thresholds[f].len() + 1;
                    let mut hs = vec![0.0; nb];
                    let mut hw = vec![0.0; nb];
                    for &i in idx {
                        let c = self.b.code(f, i);
                        hs[c] += w[i] * y[i];
                        hw[c] += w[i];
                    }
                    let (mut sl, mut wl) = (0.0, 0.0);
                    for bin in 0..nb - 1 {
                        sl += hs[bin];
                        wl += hw[bin];
                        let wr = total - wl;
                        if wl < self.growth.min_leaf || wr < self.growth.min_leaf || wl <= 0.0 || wr <= 0.0 {
                            continue;
                        }
                        let sr = sum - sl;
                        let gain = sl * sl / wl + sr * sr / wr - parent;
                        consider(&mut best, gain, min_gain, f, bin);
                    }
                }
            }
        }
        best
    }
}

fn consider(best: &mut Option<Best>, gain: f64, min_gain: f64, feature: usize, bin: usize) {
    if gain > min_gain && best.as_ref().map_or(true, |b| gain > b.gain) {
        *best = Some(Best { gain, feature, bin });
    }
}

/// Weighted class proportions.
pub(crate) fn class_leaf(y: &[usize], n_classes: usize, weights: &[f64], idx: &[usize]) -> Vec<f64> {
    let mut p = vec![0.0; n_classes];
    let mut total = 0.0;
    for &i in idx {
        p[y[i]] += weights[i];
        total += weights[i];
    }
    p.iter_mut().for_each(|v| *v /= total);
    p
}

/// Weighted mean.
pub(crate) fn mean_leaf(y: &[f64], weights: &[f64], idx: &[usize]) -> Vec<f64> {
    let (mut s, mut w) = (0.0, 0.0);
    for &i in idx {
        s += weights[i] * y[i];
        w += weights[i];
    }
    vec![s / w]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    classification: bool,
    width: usize,
    tree: Tree,
}

impl DecisionTree {
    pub fn fit(spec: &EstimatorSpec, x: &Matrix, targets: Targets<'_>, seed: u64) -> Result<Self> {
        use rand::SeedableRng;
        let growth = Growth {
            max_depth: spec.usize_or("max_depth", 8)?,
            min_leaf: spec.usize_or("min_samples_leaf", 1)?.max(1) as f64,
            max_features: x.cols(),
        };
        let binned = Binned::new(x, spec.usize_or("max_bins", 32)?)?;
        let weights = vec![1.0; x.rows()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = match targets {
            Targets::Classes { y, n_classes } => grow(
                &binned,
                &Criterion::Gini { y, n_classes },
                &weights,
                &growth,
                &mut rng,
                &|idx| class_leaf(y, n_classes, &weights, idx),
            ),
            Targets::Real(y) => {
                grow(&binned, &Criterion::Variance { y }, &weights, &growth, &mut rng, &|idx| mean_leaf(y, &weights, idx))
            }
        };
        Ok(Self { classification: matches!(targets, Targets::Classes { .. }), width: x.cols(), tree })
    }

    pub fn input_width(&self) -> usize {
        self.width
    }

    pub fn node_count(&self) -> usize {
        self.tree.len()
    }

    pub fn predict(&self, x: &Matrix) -> Predictions {
        finish(x.iter_rows().map(|r| self.tree.leaf(r).to_vec()).collect(), self.classification)
    }
}

//! CART decision tree with Gini impurity over mixed continuous and
//! categorical features.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{gate, PosTag, ScoredPost, WordScore};
use crate::error::{Error, Result};
use crate::span::{project_gold_to_tokens, token_labels_to_index_set, CharIndexSet, Label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Continuous,
    /// Values are level indices `0..levels`; splits test one level
    /// against the rest.
    Categorical { levels: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeSchema {
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
}

impl TreeSchema {
    pub fn new(features: &[(&str, FeatureKind)]) -> Self {
        TreeSchema {
            names: features.iter().map(|(n, _)| n.to_string()).collect(),
            kinds: features.iter().map(|(_, k)| *k).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn check(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.len() {
            return Err(Error::Validation(format!(
                "feature row has {} values, tree schema expects {}",
                row.len(),
                self.len()
            )));
        }
        for ((x, kind), name) in row.iter().zip(&self.kinds).zip(&self.names) {
            let ok = match kind {
                FeatureKind::Continuous => x.is_finite(),
                FeatureKind::Categorical { levels } => {
                    x.fract() == 0.0 && *x >= 0.0 && (*x as usize) < *levels
                }
            };
            if !ok {
                return Err(Error::Validation(format!(
                    "feature `{name}` value {x} does not fit {kind:?}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Left when `x[feature] <= value`.
    AtMost { feature: usize, value: f64 },
    /// Left when `x[feature] == level`.
    Is { feature: usize, level: usize },
}

impl SplitTest {
    fn goes_left(&self, row: &[f64]) -> bool {
        match *self {
            SplitTest::AtMost { feature, value } => row[feature] <= value,
            SplitTest::Is { feature, level } => row[feature] as usize == level,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: Label,
        counts: [usize; Label::COUNT],
    },
    Split {
        test: SplitTest,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_leaf: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub schema: TreeSchema,
    pub config: TreeConfig,
    pub root: Node,
}

fn gini(counts: &[usize; Label::COUNT], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize; Label::COUNT]) -> Label {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    Label::ALL[best]
}

struct Trainer<'a> {
    schema: &'a TreeSchema,
    rows: &'a [(Vec<f64>, Label)],
    config: TreeConfig,
}

impl Trainer<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; Label::COUNT] {
        let mut c = [0; Label::COUNT];
        for &i in idx {
            c[self.rows[i].1.index()] += 1;
        }
        c
    }

    /// Lowest weighted child impurity over all admissible splits; the
    /// first candidate wins ties.
    fn best_split(&self, idx: &[usize], total: &[usize; Label::COUNT]) -> Option<SplitTest> {
        let n = idx.len();
        let min_leaf = self.config.min_leaf.max(1);
        let mut best: Option<(f64, SplitTest)> = None;
        let mut consider = |score: f64, test: SplitTest| {
            if best.map_or(true, |(s, _)| score < s) {
                best = Some((score, test));
            }
        };
        let children_score = |left: &[usize; Label::COUNT], nl: usize| {
            let mut right = *total;
            for k in 0..Label::COUNT {
                right[k] -= left[k];
            }
            (nl as f64 * gini(left, nl) + (n - nl) as f64 * gini(&right, n - nl)) / n as f64
        };

        for (feature, kind) in self.schema.kinds.iter().enumerate() {
            match *kind {
                FeatureKind::Continuous => {
                    let mut sorted: Vec<usize> = idx.to_vec();
                    sorted.sort_by(|&a, &b| {
                        self.rows[a].0[feature].total_cmp(&self.rows[b].0[feature])
                    });
                    let mut left = [0; Label::COUNT];
                    for k in 0..n - 1 {
                        let (row, label) = &self.rows[sorted[k]];
                        left[label.index()] += 1;
                        let (a, b) = (row[feature], self.rows[sorted[k + 1]].0[feature]);
                        let nl = k + 1;
                        if a == b || nl < min_leaf || n - nl < min_leaf {
                            continue;
                        }
                        let mut value = a + (b - a) / 2.0;
                        if value >= b {
                            value = a;
                        }
                        consider(children_score(&left, nl), SplitTest::AtMost { feature, value });
                    }
                }
                FeatureKind::Categorical { levels } => {
                    for level in 0..levels {
                        let members: Vec<usize> = idx
                            .iter()
                            .copied()
                            .filter(|&i| self.rows[i].0[feature] as usize == level)
                            .collect();
                        let nl = members.len();
                        if nl < min_leaf || n - nl < min_leaf {
                            continue;
                        }
                        consider(
                            children_score(&self.counts(&members), nl),
                            SplitTest::Is { feature, level },
                        );
                    }
                }
            }
        }
        best.map(|(_, t)| t)
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.config.max_depth {
            return Node::Leaf {
                label: majority(&counts),
                counts,
            };
        }
        let Some(test) = self.best_split(&idx, &counts) else {
            return Node::Leaf {
                label: majority(&counts),
                counts,
            };
        };
        let (l, r): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| test.goes_left(&self.rows[i].0));
        Node::Split {
            test,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }
}

/// Greedy top-down CART. Impure nodes above `max_depth` are split on the
/// best admissible test even when it does not lower impurity, which lets
/// interactions such as XOR be learned at depth 2.
pub fn train_decision_tree(
    schema: TreeSchema,
    samples: &[(Vec<f64>, Label)],
    config: TreeConfig,
) -> Result<DecisionTree> {
    if samples.is_empty() {
        return Err(Error::Data("no training samples for the decision tree".into()));
    }
    for (row, _) in samples {
        schema.check(row)?;
    }
    let trainer = Trainer {
        schema: &schema,
        rows: samples,
        config,
    };
    let root = trainer.grow((0..samples.len()).collect(), 0);
    Ok(DecisionTree {
        schema,
        config,
        root,
    })
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.leaves()
    }

    pub fn predict_one(&self, row: &[f64]) -> Result<Label> {
        self.schema.check(row)?;
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label, .. } => return Ok(*label),
                Node::Split { test, left, right } => {
                    node = if test.goes_left(row) { left } else { right };
                }
            }
        }
    }

    /// Tree-selected toxic offsets of a post that passes the gate.
    pub fn predict_post(&self, post: &ScoredPost, gate_tau: f64) -> Result<CharIndexSet> {
        if !gate(post, gate_tau) {
            return Ok(CharIndexSet::new());
        }
        let rows: Vec<Vec<f64>> = post.words.iter().map(word_features).collect();
        let labels = predict_tree(self, &rows)?;
        Ok(token_labels_to_index_set(&post.tokens(), &labels))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(std::io::BufReader::new(file))
    }

    /// Parses a saved tree and checks that every split fits the schema.
    pub fn from_reader<R: std::io::Read>(reader: R) -> Result<Self> {
        let tree: DecisionTree = serde_json::from_reader(reader)?;
        tree.validate()?;
        Ok(tree)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema.names.len() != self.schema.kinds.len() {
            return Err(Error::Validation(
                "tree schema names and kinds differ in length".into(),
            ));
        }
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            let Node::Split { test, left, right } = node else {
                continue;
            };
            let ok = match *test {
                SplitTest::AtMost { feature, value } => {
                    !value.is_nan()
                        && self.schema.kinds.get(feature) == Some(&FeatureKind::Continuous)
                }
                SplitTest::Is { feature, level } => matches!(
                    self.schema.kinds.get(feature),
                    Some(FeatureKind::Categorical { levels }) if level < *levels
                ),
            };
            if !ok {
                return Err(Error::Validation(format!(
                    "split {test:?} does not fit the tree schema"
                )));
            }
            stack.push(left);
            stack.push(right);
        }
        Ok(())
    }
}

pub fn predict_tree(tree: &DecisionTree, rows: &[Vec<f64>]) -> Result<Vec<Label>> {
    rows.iter().map(|r| tree.predict_one(r)).collect()
}

/// Schema of [`word_features`]: attention, POS, polarity, hate flag.
pub fn word_schema() -> TreeSchema {
    TreeSchema::new(&[
        ("attn", FeatureKind::Continuous),
        ("pos", FeatureKind::Categorical { levels: PosTag::COUNT }),
        ("polarity", FeatureKind::Continuous),
        ("is_hate", FeatureKind::Continuous),
    ])
}

pub fn word_features(w: &WordScore) -> Vec<f64> {
    vec![
        w.attn,
        w.pos.index() as f64,
        w.polarity,
        if w.is_hate { 1.0 } else { 0.0 },
    ]
}

/// One labelled feature row per word, labels projected from gold offsets.
pub fn word_samples(posts: &[(ScoredPost, CharIndexSet)]) -> Vec<(Vec<f64>, Label)> {
    posts
        .iter()
        .flat_map(|(post, gold)| {
            let labels = project_gold_to_tokens(gold, &post.tokens());
            post.words
                .iter()
                .map(word_features)
                .zip(labels)
                .collect::<Vec<_>>()
        })
        .collect()
}

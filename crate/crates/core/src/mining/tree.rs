use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::dataset::{Attribute, AttributeSource, Dataset};
use super::discretize::{Class, CLASS_COUNT};
use crate::error::{Error, Result};

/// First line of every model file.
pub const MODEL_MAGIC: &str = "etea-tree v1";

/// Gains at or below this are float noise, not information.
const MIN_GAIN: f64 = 1e-12;

/// Ratios closer than this count as tied; the earlier candidate wins.
const RATIO_TIE: f64 = 1e-12;

type Counts = [u64; CLASS_COUNT];

/// Misclassification costs, `cost[actual][predicted]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostMatrix(pub [[f64; CLASS_COUNT]; CLASS_COUNT]);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Nodes with fewer rows are not split.
    pub min_leaf: usize,
    pub max_depth: usize,
    pub cost: Option<CostMatrix>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { min_leaf: 25, max_depth: 20, cost: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        class: Class,
        distribution: Counts,
    },
    /// Rows with `value <= threshold` go left.
    Split {
        attribute: Attribute,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn leaf(class: Class, distribution: Counts) -> Self {
        Node::Leaf { class, distribution }
    }

    pub fn split(attribute: Attribute, threshold: f64, left: Node, right: Node) -> Self {
        Node::Split { attribute, threshold, left: Box::new(left), right: Box::new(right) }
    }

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

/// A trained classifier over a fixed attribute schema.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    attributes: Vec<Attribute>,
    root: Node,
}

impl DecisionTree {
    pub fn from_root(attributes: Vec<Attribute>, root: Node) -> Self {
        Self { attributes, root }
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaves()
    }

    /// Classifies any row exposing the attributes the tree splits on.
    pub fn predict<S: AttributeSource + ?Sized>(&self, row: &S) -> Result<Class> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, .. } => return Ok(*class),
                Node::Split { attribute, threshold, left, right } => {
                    let v = row.attribute(*attribute).ok_or(Error::MissingAttribute(attribute.name()))?;
                    node = if v <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Classifies a row given as values aligned with [`Self::attributes`].
    pub fn predict_values(&self, values: &[f64]) -> Class {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, .. } => return *class,
                Node::Split { attribute, threshold, left, right } => {
                    let col = self.attributes.iter().position(|a| a == attribute).expect("split attribute in schema");
                    node = if values[col] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Line-oriented text form: a magic line, the attribute schema, then one
    /// node per line in preorder, each prefixed by its depth.
    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{MODEL_MAGIC}").unwrap();
        let names: Vec<&str> = self.attributes.iter().map(|a| a.name()).collect();
        writeln!(out, "attributes {}", names.join(",")).unwrap();
        write_node(&mut out, &self.root, 0);
        out
    }

    pub fn parse_model(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end())).filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| Error::ModelFormat { line, msg: msg.to_string() };
        match lines.next() {
            Some((_, l)) if l == MODEL_MAGIC => {}
            Some((n, _)) => return Err(err(n, "missing model header")),
            None => return Err(err(1, "empty model file")),
        }
        let (n, schema) = lines.next().ok_or_else(|| err(2, "missing attribute line"))?;
        let names = schema.strip_prefix("attributes ").ok_or_else(|| err(n, "expected `attributes`"))?;
        let attributes = names
            .split(',')
            .map(|s| s.parse::<Attribute>().map_err(|e| err(n, &e)))
            .collect::<Result<Vec<_>>>()?;
        let nodes: Vec<(usize, &str)> = lines.collect();
        let mut cursor = 0;
        let root = parse_node(&nodes, &mut cursor, 0, &attributes)?;
        if let Some((n, _)) = nodes.get(cursor) {
            return Err(err(*n, "trailing lines after the tree"));
        }
        Ok(Self { attributes, root })
    }
}

fn write_node(out: &mut String, node: &Node, depth: usize) {
    match node {
        Node::Leaf { class, distribution } => {
            let dist: Vec<String> = distribution.iter().map(u64::to_string).collect();
            writeln!(out, "{depth} leaf {class} {}", dist.join(",")).unwrap();
        }
        Node::Split { attribute, threshold, left, right } => {
            if attribute.is_binary() {
                writeln!(out, "{depth} split {attribute} = 0").unwrap();
            } else {
                writeln!(out, "{depth} split {attribute} <= {threshold}").unwrap();
            }
            write_node(out, left, depth + 1);
            write_node(out, right, depth + 1);
        }
    }
}

fn parse_node(lines: &[(usize, &str)], cursor: &mut usize, depth: usize, schema: &[Attribute]) -> Result<Node> {
    let &(n, line) = lines
        .get(*cursor)
        .ok_or_else(|| Error::ModelFormat { line: lines.last().map_or(0, |l| l.0), msg: "tree ends early".into() })?;
    *cursor += 1;
    let err = |msg: String| Error::ModelFormat { line: n, msg };
    let fields: Vec<&str> = line.split_whitespace().collect();
    let found_depth: usize = fields.first().and_then(|d| d.parse().ok()).ok_or_else(|| err("missing depth".into()))?;
    if found_depth != depth {
        return Err(err(format!("expected depth {depth}, found {found_depth}")));
    }
    match fields.get(1..) {
        Some(["leaf", class, dist]) => {
            let class: Class = class.parse().map_err(err)?;
            let counts: Vec<u64> = dist
                .split(',')
                .map(|c| c.parse::<u64>().map_err(|e| err(format!("distribution: {e}"))))
                .collect::<Result<_>>()?;
            let distribution: Counts = counts.try_into().map_err(|_| err("distribution needs 5 counts".into()))?;
            Ok(Node::leaf(class, distribution))
        }
        Some(["split", attr, op, value]) => {
            let attribute: Attribute = attr.parse().map_err(err)?;
            if !schema.contains(&attribute) {
                return Err(err(format!("{attribute} is not in the attribute schema")));
            }
            let threshold = match (*op, attribute.is_binary()) {
                ("=", true) if *value == "0" => 0.5,
                ("<=", false) => value.parse::<f64>().map_err(|e| err(format!("threshold: {e}")))?,
                _ => return Err(err(format!("bad split condition `{op} {value}` for {attribute}"))),
            };
            let left = parse_node(lines, cursor, depth + 1, schema)?;
            let right = parse_node(lines, cursor, depth + 1, schema)?;
            Ok(Node::split(attribute, threshold, left, right))
        }
        _ => Err(err(format!("unrecognized node line {line:?}"))),
    }
}

fn entropy(counts: &Counts, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Gain ratio of splitting `parent` into `left` and the remainder.
/// `None` when the split carries no information.
pub(crate) fn gain_ratio(parent: &Counts, left: &Counts) -> Option<f64> {
    let right: Counts = std::array::from_fn(|c| parent[c] - left[c]);
    let n: u64 = parent.iter().sum();
    let nl: u64 = left.iter().sum();
    let nr = n - nl;
    if nl == 0 || nr == 0 {
        return None;
    }
    let (pl, pr) = (nl as f64 / n as f64, nr as f64 / n as f64);
    let gain = entropy(parent, n) - pl * entropy(left, nl) - pr * entropy(&right, nr);
    if gain <= MIN_GAIN {
        return None;
    }
    let split_info = -pl * pl.log2() - pr * pr.log2();
    Some(gain / split_info)
}

fn leaf_class(counts: &Counts, cost: Option<&CostMatrix>) -> Class {
    let best = match cost {
        None => (0..CLASS_COUNT).fold(0, |b, c| if counts[c] > counts[b] { c } else { b }),
        Some(CostMatrix(m)) => {
            let expected = |p: usize| -> f64 { (0..CLASS_COUNT).map(|a| counts[a] as f64 * m[a][p]).sum() };
            (0..CLASS_COUNT).fold(0, |b, p| if expected(p) < expected(b) { p } else { b })
        }
    };
    Class::from_index(best).expect("class index")
}

struct Builder<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
}

struct Candidate {
    ratio: f64,
    column: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Counts {
        let mut c = [0; CLASS_COUNT];
        for &i in idx {
            c[self.data.rows[i].class.index()] += 1;
        }
        c
    }

    fn value(&self, row: usize, column: usize) -> f64 {
        self.data.rows[row].values[column]
    }

    /// Highest gain ratio over every attribute and every midpoint between
    /// consecutive distinct values; ties keep the earlier attribute and the
    /// lower threshold.
    fn best_split(&self, idx: &[usize], parent: &Counts) -> Option<Candidate> {
        let mut best: Option<Candidate> = None;
        let mut sorted = idx.to_vec();
        for column in 0..self.data.attributes.len() {
            sorted.sort_by(|&a, &b| self.value(a, column).total_cmp(&self.value(b, column)));
            let mut left = [0; CLASS_COUNT];
            for k in 0..sorted.len() - 1 {
                left[self.data.rows[sorted[k]].class.index()] += 1;
                let (lo, hi) = (self.value(sorted[k], column), self.value(sorted[k + 1], column));
                if lo == hi {
                    continue;
                }
                let Some(ratio) = gain_ratio(parent, &left) else { continue };
                if best.as_ref().is_none_or(|b| ratio > b.ratio + RATIO_TIE) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Candidate { ratio, column, threshold });
                }
            }
        }
        best
    }

    fn grow(&self, idx: Vec<usize>, depth: usize) -> Node {
        let counts = self.counts(&idx);
        let leaf = || Node::leaf(leaf_class(&counts, self.params.cost.as_ref()), counts);
        let classes_present = counts.iter().filter(|&&c| c > 0).count();
        if classes_present <= 1 || idx.len() < self.params.min_leaf || depth >= self.params.max_depth {
            return leaf();
        }
        let Some(split) = self.best_split(&idx, &counts) else { return leaf() };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.value(i, split.column) <= split.threshold);
        Node::split(
            self.data.attributes[split.column],
            split.threshold,
            self.grow(left, depth + 1),
            self.grow(right, depth + 1),
        )
    }
}

/// Top-down induction of a gain-ratio tree.
pub fn train_tree(dataset: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let builder = Builder { data: dataset, params };
    let root = builder.grow((0..dataset.len()).collect(), 0);
    Ok(DecisionTree { attributes: dataset.attributes.clone(), root })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mining::Row;
    use proptest::prelude::*;

    fn dataset(attributes: Vec<Attribute>, rows: &[(&[f64], Class)]) -> Dataset {
        Dataset::new(attributes, rows.iter().map(|(v, c)| Row { values: v.to_vec(), class: *c }).collect())
    }

    fn small() -> TreeParams {
        TreeParams { min_leaf: 2, ..TreeParams::default() }
    }

    #[test]
    fn single_class_is_a_leaf() {
        let d = dataset(vec![Attribute::TimeNorm], &[(&[0.1], Class::Light), (&[0.9], Class::Light)]);
        let t = train_tree(&d, &small()).unwrap();
        assert_eq!(t.root(), &Node::leaf(Class::Light, [0, 0, 0, 2, 0]));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let d = dataset(vec![Attribute::TimeNorm], &[]);
        assert!(matches!(train_tree(&d, &small()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn separable_at_half() {
        let rows: Vec<(Vec<f64>, Class)> =
            (0..30).map(|i| if i % 2 == 0 { (vec![0.0], Class::Darker) } else { (vec![1.0], Class::Lighter) }).collect();
        let borrowed: Vec<(&[f64], Class)> = rows.iter().map(|(v, c)| (v.as_slice(), *c)).collect();
        let t = train_tree(&dataset(vec![Attribute::TransNorm], &borrowed), &TreeParams::default()).unwrap();
        match t.root() {
            Node::Split { attribute, threshold, left, right } => {
                assert_eq!(*attribute, Attribute::TransNorm);
                assert_eq!(*threshold, 0.5);
                assert!(matches!(**left, Node::Leaf { class: Class::Darker, .. }));
                assert!(matches!(**right, Node::Leaf { class: Class::Lighter, .. }));
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }

    #[test]
    fn small_nodes_are_not_split() {
        let d = dataset(vec![Attribute::TransNorm], &[(&[0.0], Class::Darker), (&[1.0], Class::Lighter)]);
        let t = train_tree(&d, &TreeParams::default()).unwrap();
        assert_eq!(t.leaf_count(), 1);
        assert_eq!(t.predict_values(&[1.0]), Class::Darker);
    }

    #[test]
    fn cost_matrix_moves_leaf_class() {
        let counts = [3, 2, 0, 0, 0];
        assert_eq!(leaf_class(&counts, None), Class::Darker);
        let mut m = [[1.0; 5]; 5];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        assert_eq!(leaf_class(&counts, Some(&CostMatrix(m))), Class::Darker);
        m[1][0] = 10.0;
        assert_eq!(leaf_class(&counts, Some(&CostMatrix(m))), Class::Dark);
    }

    /// Brute-force gain ratio straight from the definition, recounting every
    /// partition from scratch.
    fn oracle_gain_ratio(rows: &[(Vec<f64>, usize)], column: usize, threshold: f64) -> f64 {
        let h = |subset: &[&(Vec<f64>, usize)]| -> f64 {
            let n = subset.len() as f64;
            (0..5)
                .map(|c| subset.iter().filter(|r| r.1 == c).count() as f64 / n)
                .filter(|&p| p > 0.0)
                .map(|p| -p * p.log2())
                .sum()
        };
        let all: Vec<&(Vec<f64>, usize)> = rows.iter().collect();
        let left: Vec<_> = rows.iter().filter(|r| r.0[column] <= threshold).collect();
        let right: Vec<_> = rows.iter().filter(|r| r.0[column] > threshold).collect();
        if left.is_empty() || right.is_empty() {
            return f64::NEG_INFINITY;
        }
        let n = rows.len() as f64;
        let (pl, pr) = (left.len() as f64 / n, right.len() as f64 / n);
        let gain = h(&all) - pl * h(&left) - pr * h(&right);
        if gain <= 1e-12 {
            return f64::NEG_INFINITY;
        }
        gain / (-pl * pl.log2() - pr * pr.log2())
    }

    proptest! {
        #[test]
        fn root_split_matches_exhaustive_enumeration(
            raw in prop::collection::vec((prop::array::uniform3(0u8..6), 0usize..3), 8)
        ) {
            let rows: Vec<(Vec<f64>, usize)> = raw.iter().map(|(v, c)| (v.iter().map(|&x| f64::from(x)).collect(), *c)).collect();
            let attrs = vec![Attribute::TransNorm, Attribute::TimeNorm, Attribute::CognitiveDp];
            let d = Dataset::new(attrs.clone(), rows.iter().map(|(v, c)| Row { values: v.clone(), class: Class::from_index(*c).unwrap() }).collect());
            // enumerate every attribute and every midpoint
            let mut best: Option<(f64, usize, f64)> = None;
            for col in 0..3 {
                let mut vals: Vec<f64> = rows.iter().map(|r| r.0[col]).collect();
                vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                vals.dedup();
                for w in vals.windows(2) {
                    let t = (w[0] + w[1]) / 2.0;
                    let gr = oracle_gain_ratio(&rows, col, t);
                    if gr.is_finite() && best.is_none_or(|b| gr > b.0 + 1e-12) {
                        best = Some((gr, col, t));
                    }
                }
            }
            let tree = train_tree(&d, &small()).unwrap();
            match (best, tree.root()) {
                (None, Node::Leaf { .. }) => {}
                (Some((_, col, t)), Node::Split { attribute, threshold, .. }) => {
                    prop_assert_eq!(*attribute, attrs[col]);
                    prop_assert_eq!(*threshold, t);
                }
                (b, root) => prop_assert!(false, "oracle {:?} vs tree root {:?}", b, root),
            }
        }

        #[test]
        fn training_ignores_row_order(
            raw in prop::collection::vec((0u8..10, 0u8..4, 0usize..5), 10..80),
            seed: u64,
        ) {
            let rows: Vec<Row> = raw.iter().map(|&(a, b, c)| Row { values: vec![f64::from(a), f64::from(b)], class: Class::from_index(c).unwrap() }).collect();
            let attrs = vec![Attribute::TransRank, Attribute::Selected];
            let d = Dataset::new(attrs.clone(), rows.clone());
            let mut permuted = rows;
            let k = (seed as usize) % permuted.len();
            permuted.rotate_left(k);
            permuted.reverse();
            let p = Dataset::new(attrs, permuted);
            let params = TreeParams { min_leaf: 4, ..TreeParams::default() };
            prop_assert_eq!(train_tree(&d, &params).unwrap(), train_tree(&p, &params).unwrap());
        }

        #[test]
        fn training_accuracy_beats_majority(
            raw in prop::collection::vec((0u8..10, 0u8..10, 0usize..5), 1..120),
        ) {
            let rows: Vec<Row> = raw.iter().map(|&(a, b, c)| Row { values: vec![f64::from(a), f64::from(b)], class: Class::from_index(c).unwrap() }).collect();
            let d = Dataset::new(vec![Attribute::TimeRank, Attribute::TransRank], rows);
            let tree = train_tree(&d, &TreeParams { min_leaf: 3, ..TreeParams::default() }).unwrap();
            let correct = d.rows.iter().filter(|r| tree.predict_values(&r.values) == r.class).count();
            let mut counts = [0usize; 5];
            for r in &d.rows {
                counts[r.class.index()] += 1;
            }
            prop_assert!(correct >= *counts.iter().max().unwrap());
        }

        #[test]
        fn model_text_round_trips(
            raw in prop::collection::vec((0.0f64..1.0, 0u8..2, 0usize..5), 5..60),
        ) {
            let rows: Vec<Row> = raw.iter().map(|&(a, s, c)| Row { values: vec![a, f64::from(s)], class: Class::from_index(c).unwrap() }).collect();
            let d = Dataset::new(vec![Attribute::CognitiveDp, Attribute::Selected], rows);
            let tree = train_tree(&d, &TreeParams { min_leaf: 2, ..TreeParams::default() }).unwrap();
            let parsed = DecisionTree::parse_model(&tree.to_model_string()).unwrap();
            prop_assert_eq!(parsed, tree);
        }
    }

    #[test]
    fn prediction_ignores_attribute_order() {
        let tree = DecisionTree::from_root(
            vec![Attribute::TimeNorm, Attribute::Selected],
            Node::split(
                Attribute::Selected,
                0.5,
                Node::split(Attribute::TimeNorm, 0.3, Node::leaf(Class::Darker, [1, 0, 0, 0, 0]), Node::leaf(Class::Light, [0, 0, 0, 1, 0])),
                Node::leaf(Class::Lighter, [0, 0, 0, 0, 1]),
            ),
        );
        let a: Vec<(Attribute, f64)> = vec![(Attribute::TimeNorm, 0.4), (Attribute::Selected, 0.0)];
        let b: Vec<(Attribute, f64)> = vec![(Attribute::Selected, 0.0), (Attribute::TimeNorm, 0.4)];
        assert_eq!(tree.predict(a.as_slice()).unwrap(), Class::Light);
        assert_eq!(tree.predict(b.as_slice()).unwrap(), Class::Light);
        assert_eq!(tree.predict_values(&[0.4, 0.0]), Class::Light);
        let missing: Vec<(Attribute, f64)> = vec![(Attribute::TimeNorm, 0.4)];
        assert!(matches!(tree.predict(missing.as_slice()), Err(Error::MissingAttribute("Selected"))));
        let text = tree.to_model_string();
        assert!(text.contains("0 split Selected = 0"));
        assert!(text.contains("1 split TimeNorm <= 0.3"));
    }

    #[test]
    fn malformed_models_are_rejected() {
        assert!(DecisionTree::parse_model("").is_err());
        assert!(DecisionTree::parse_model("etea-tree v2\nattributes TimeNorm\n0 leaf Dark 0,1,0,0,0\n").is_err());
        assert!(DecisionTree::parse_model(&format!("{MODEL_MAGIC}\nattributes TimeNorm\n0 split TimeNorm <= 0.5\n1 leaf Dark 0,1,0,0,0\n")).is_err());
        assert!(DecisionTree::parse_model(&format!("{MODEL_MAGIC}\nattributes TimeNorm\n0 split TransNorm <= 0.5\n1 leaf Dark 0,1,0,0,0\n1 leaf Dark 0,1,0,0,0\n")).is_err());
        assert!(DecisionTree::parse_model(&format!("{MODEL_MAGIC}\nattributes TimeNorm\n0 leaf Dark 0,1,0,0,0\n0 leaf Dark 0,1,0,0,0\n")).is_err());
        let ok = DecisionTree::parse_model(&format!("{MODEL_MAGIC}\nattributes TimeNorm\n0 leaf Dark 0,1,0,0,0\n")).unwrap();
        assert_eq!(ok.predict_values(&[0.2]), Class::Dark);
    }
}

//! Persistent store for the knowledge base and every trained model.
//!
//! One self-describing text file holds the whole bundle. The first line
//! is the `CPSC1` version tag; named sections follow, with reals printed
//! as base-10 scientific notation at 17 significant digits so every f64
//! round-trips exactly. Identical bundles serialize to identical bytes.
//! Loading is all-or-nothing: version, structure, and model invariants
//! are checked before a bundle is returned.

use std::fmt::Write as _;
use std::path::Path;

use crate::artmap::{ArtmapCategory, ArtmapModel, ArtmapParams};
use crate::error::{Error, Result};
use crate::featurex::PhysicoFeatures;
use crate::neuralnet::{Layer, MlpConfig, MlpModel};
use crate::roughset::{DecisionTable, Reduct, Rule, RuleBase};
use crate::spectral::{FamilyBand, KnowledgeBase};
use crate::strsvm::{BinarySvm, KmerWeightTable, SvmModel};
use crate::train::TrainConfig;

/// Format tag on the first line of every bundle file.
pub const BUNDLE_VERSION: &str = "CPSC1";

/// Rough-set inference state: the discretized training table (the
/// neighborhood fallback votes over it), the reduct, and the RDT rules.
#[derive(Debug, Clone, PartialEq)]
pub struct RoughArtifacts {
    pub table: DecisionTable,
    pub reduct: Reduct,
    pub rules: RuleBase,
}

/// Every trained artifact of the cascade, tied to one family list.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    /// Sorted family names; the order defines every label index below.
    pub families: Vec<String>,
    pub kb: KnowledgeBase,
    pub artmap: ArtmapModel,
    pub kmer_table: KmerWeightTable,
    pub svm: SvmModel,
    pub mlp: MlpModel,
    pub rough: RoughArtifacts,
    pub train_config: TrainConfig,
}

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serialize a bundle to its canonical text form.
pub fn bundle_to_string(bundle: &ModelBundle) -> String {
    let mut out = String::new();
    let w = &mut out;

    writeln!(w, "{BUNDLE_VERSION}").unwrap();
    writeln!(w, "families {}", bundle.families.len()).unwrap();
    for name in &bundle.families {
        writeln!(w, "{name}").unwrap();
    }

    let c = &bundle.train_config;
    writeln!(
        w,
        "config k {} pseudocount {} svm_c {} bins {} rho_base {} alpha {} beta {} eps_mt {} \
         artmap_epochs {} hidden {} epochs {} learning_rate {} seed {} top_k {} slack {} spectral_m {}",
        c.k,
        real(c.pseudocount),
        real(c.svm_c),
        c.bins,
        real(c.rho_base),
        real(c.alpha),
        real(c.beta),
        real(c.eps_mt),
        c.artmap_epochs,
        c.hidden,
        c.epochs,
        real(c.learning_rate),
        c.seed,
        c.top_k,
        real(c.slack),
        c.spectral_m
    )
    .unwrap();

    writeln!(w, "section kb").unwrap();
    writeln!(w, "top_k {} slack {}", bundle.kb.top_k, real(bundle.kb.slack)).unwrap();
    writeln!(w, "scaler {}", bundle.kb.scaler.len()).unwrap();
    for &(lo, hi) in &bundle.kb.scaler {
        writeln!(w, "{} {}", real(lo), real(hi)).unwrap();
    }
    for band in &bundle.kb.bands {
        writeln!(w, "family {}", band.family).unwrap();
        for &(lo, hi) in &band.bands {
            writeln!(w, "band {} {}", real(lo), real(hi)).unwrap();
        }
    }

    writeln!(w, "section artmap").unwrap();
    let p = &bundle.artmap.params;
    writeln!(
        w,
        "params {} {} {} {} {}",
        real(p.rho_base),
        real(p.alpha),
        real(p.beta),
        real(p.eps_mt),
        p.max_epochs
    )
    .unwrap();
    writeln!(w, "dim {}", bundle.artmap.dim).unwrap();
    writeln!(w, "categories {}", bundle.artmap.categories.len()).unwrap();
    for cat in &bundle.artmap.categories {
        write!(w, "cat {}", cat.label).unwrap();
        for &v in &cat.weights {
            write!(w, " {}", real(v)).unwrap();
        }
        writeln!(w).unwrap();
    }

    writeln!(w, "section kmer").unwrap();
    let t = &bundle.kmer_table;
    writeln!(
        w,
        "k {} pseudocount {} families {} distinct {}",
        t.k,
        real(t.pseudocount),
        t.n_families,
        t.distinct_kmers
    )
    .unwrap();
    writeln!(w, "entries {}", t.weights.len()).unwrap();
    for (kmer, weights) in &t.weights {
        write!(w, "kmer {kmer}").unwrap();
        for &v in weights {
            write!(w, " {}", real(v)).unwrap();
        }
        writeln!(w).unwrap();
    }

    writeln!(w, "section svm").unwrap();
    writeln!(
        w,
        "c {} dim {} machines {}",
        real(bundle.svm.c),
        bundle.svm.dim,
        bundle.svm.machines.len()
    )
    .unwrap();
    for machine in &bundle.svm.machines {
        write!(w, "machine {}", real(machine.bias)).unwrap();
        for &v in &machine.weights {
            write!(w, " {}", real(v)).unwrap();
        }
        writeln!(w).unwrap();
    }

    writeln!(w, "section mlp").unwrap();
    let cfg = &bundle.mlp.config;
    write!(w, "sizes {}", cfg.layer_sizes.len()).unwrap();
    for &s in &cfg.layer_sizes {
        write!(w, " {s}").unwrap();
    }
    writeln!(w).unwrap();
    writeln!(
        w,
        "learning_rate {} epochs {} seed {}",
        real(cfg.learning_rate),
        cfg.epochs,
        cfg.seed
    )
    .unwrap();
    for layer in &bundle.mlp.layers {
        writeln!(w, "layer {} {}", layer.in_dim, layer.out_dim).unwrap();
        for row in 0..layer.out_dim {
            write!(w, "w").unwrap();
            for &v in &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim] {
                write!(w, " {}", real(v)).unwrap();
            }
            writeln!(w).unwrap();
        }
        write!(w, "b").unwrap();
        for &v in &layer.biases {
            write!(w, " {}", real(v)).unwrap();
        }
        writeln!(w).unwrap();
    }

    writeln!(w, "section rough").unwrap();
    let rough = &bundle.rough;
    writeln!(w, "bins {} attrs {}", rough.table.bins, rough.table.n_attrs).unwrap();
    for cuts in &rough.table.boundaries {
        write!(w, "cuts {}", cuts.len()).unwrap();
        for &v in cuts {
            write!(w, " {}", real(v)).unwrap();
        }
        writeln!(w).unwrap();
    }
    write!(w, "reduct {}", rough.reduct.attrs.len()).unwrap();
    for &a in &rough.reduct.attrs {
        write!(w, " {a}").unwrap();
    }
    writeln!(w, " gamma {}", real(rough.reduct.gamma)).unwrap();
    writeln!(w, "rules {}", rough.rules.rules.len()).unwrap();
    for rule in &rough.rules.rules {
        write!(
            w,
            "rule {} {} {}",
            rule.label,
            rule.support,
            rule.conditions.len()
        )
        .unwrap();
        for &(attr, value) in &rule.conditions {
            write!(w, " {attr} {value}").unwrap();
        }
        writeln!(w).unwrap();
    }
    writeln!(w, "rows {}", rough.table.rows.len()).unwrap();
    for (bins, label) in &rough.table.rows {
        write!(w, "row {label}").unwrap();
        for &b in bins {
            write!(w, " {b}").unwrap();
        }
        writeln!(w).unwrap();
    }
    writeln!(w, "end").unwrap();
    out
}

/// Write a bundle to disk.
pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, bundle_to_string(bundle)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

struct Cursor<'a> {
    lines: std::str::Lines<'a>,
    section: &'static str,
}

impl<'a> Cursor<'a> {
    fn fail(&self, msg: impl Into<String>) -> Error {
        Error::BundleParse {
            section: self.section.to_string(),
            msg: msg.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        self.lines
            .next()
            .ok_or_else(|| self.fail("unexpected end of file"))
    }

    /// Next line split into tokens, with the expected leading tag removed.
    fn tagged(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.line()?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(found) if found == tag => Ok(tokens.collect()),
            Some(found) => Err(self.fail(format!("expected '{tag}', found '{found}'"))),
            None => Err(self.fail(format!("expected '{tag}', found a blank line"))),
        }
    }

    fn parse_f64(&self, token: &str) -> Result<f64> {
        token
            .parse::<f64>()
            .map_err(|_| self.fail(format!("bad real '{token}'")))
    }

    fn parse_usize(&self, token: &str) -> Result<usize> {
        token
            .parse::<usize>()
            .map_err(|_| self.fail(format!("bad integer '{token}'")))
    }

    fn parse_u64(&self, token: &str) -> Result<u64> {
        token
            .parse::<u64>()
            .map_err(|_| self.fail(format!("bad integer '{token}'")))
    }

    fn parse_u16(&self, token: &str) -> Result<u16> {
        token
            .parse::<u16>()
            .map_err(|_| self.fail(format!("bad bin index '{token}'")))
    }

    fn reals(&self, tokens: &[&str]) -> Result<Vec<f64>> {
        tokens.iter().map(|t| self.parse_f64(t)).collect()
    }
}

/// Parse a bundle from its text form, validating all invariants.
pub fn bundle_from_str(text: &str) -> Result<ModelBundle> {
    let mut cursor = Cursor {
        lines: text.lines(),
        section: "header",
    };

    let version = cursor.line()?;
    if version != BUNDLE_VERSION {
        return Err(Error::Version {
            found: version.to_string(),
            expected: BUNDLE_VERSION.to_string(),
        });
    }

    let tokens = cursor.tagged("families")?;
    let n_families = cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
    let mut families = Vec::with_capacity(n_families);
    for _ in 0..n_families {
        families.push(cursor.line()?.to_string());
    }

    let tokens = cursor.tagged("config")?;
    let mut kv = std::collections::HashMap::new();
    for pair in tokens.chunks(2) {
        if pair.len() == 2 {
            kv.insert(pair[0], pair[1]);
        }
    }
    let get = |key: &str| -> Result<&str> {
        kv.get(key)
            .copied()
            .ok_or_else(|| cursor.fail(format!("config key '{key}' missing")))
    };
    let train_config = TrainConfig {
        k: cursor.parse_usize(get("k")?)?,
        pseudocount: cursor.parse_f64(get("pseudocount")?)?,
        svm_c: cursor.parse_f64(get("svm_c")?)?,
        bins: cursor.parse_usize(get("bins")?)?,
        rho_base: cursor.parse_f64(get("rho_base")?)?,
        alpha: cursor.parse_f64(get("alpha")?)?,
        beta: cursor.parse_f64(get("beta")?)?,
        eps_mt: cursor.parse_f64(get("eps_mt")?)?,
        artmap_epochs: cursor.parse_usize(get("artmap_epochs")?)?,
        hidden: cursor.parse_usize(get("hidden")?)?,
        epochs: cursor.parse_usize(get("epochs")?)?,
        learning_rate: cursor.parse_f64(get("learning_rate")?)?,
        seed: cursor.parse_u64(get("seed")?)?,
        top_k: cursor.parse_usize(get("top_k")?)?,
        slack: cursor.parse_f64(get("slack")?)?,
        spectral_m: cursor.parse_usize(get("spectral_m")?)?,
    };

    // kb
    cursor.tagged("section")?;
    cursor.section = "kb";
    let tokens = cursor.tagged("top_k")?;
    if tokens.len() != 3 || tokens[1] != "slack" {
        return Err(cursor.fail("malformed top_k line"));
    }
    let top_k = cursor.parse_usize(tokens[0])?;
    let slack = cursor.parse_f64(tokens[2])?;
    let tokens = cursor.tagged("scaler")?;
    let dim = cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing dim"))?)?;
    let mut scaler = Vec::with_capacity(dim);
    for _ in 0..dim {
        let line = cursor.line()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(cursor.fail("scaler line needs two reals"));
        }
        scaler.push((cursor.parse_f64(parts[0])?, cursor.parse_f64(parts[1])?));
    }
    let mut bands = Vec::with_capacity(n_families);
    for _ in 0..n_families {
        let tokens = cursor.tagged("family")?;
        let family = tokens
            .first()
            .ok_or_else(|| cursor.fail("missing family name"))?
            .to_string();
        let mut family_bands = Vec::with_capacity(dim);
        for _ in 0..dim {
            let tokens = cursor.tagged("band")?;
            if tokens.len() != 2 {
                return Err(cursor.fail("band line needs two reals"));
            }
            family_bands.push((cursor.parse_f64(tokens[0])?, cursor.parse_f64(tokens[1])?));
        }
        bands.push(FamilyBand {
            family,
            bands: family_bands,
        });
    }
    let kb = KnowledgeBase {
        bands,
        scaler,
        top_k,
        slack,
    };

    // artmap
    cursor.tagged("section")?;
    cursor.section = "artmap";
    let tokens = cursor.tagged("params")?;
    if tokens.len() != 5 {
        return Err(cursor.fail("params line needs five values"));
    }
    let params = ArtmapParams {
        rho_base: cursor.parse_f64(tokens[0])?,
        alpha: cursor.parse_f64(tokens[1])?,
        beta: cursor.parse_f64(tokens[2])?,
        eps_mt: cursor.parse_f64(tokens[3])?,
        max_epochs: cursor.parse_usize(tokens[4])?,
    };
    let tokens = cursor.tagged("dim")?;
    let artmap_dim = cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing dim"))?)?;
    let tokens = cursor.tagged("categories")?;
    let n_categories =
        cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
    let mut categories = Vec::with_capacity(n_categories);
    for _ in 0..n_categories {
        let tokens = cursor.tagged("cat")?;
        if tokens.len() != 1 + 2 * artmap_dim {
            return Err(cursor.fail(format!(
                "category needs a label and {} weights",
                2 * artmap_dim
            )));
        }
        categories.push(ArtmapCategory {
            label: cursor.parse_usize(tokens[0])?,
            weights: cursor.reals(&tokens[1..])?,
        });
    }
    let artmap = ArtmapModel {
        categories,
        dim: artmap_dim,
        params,
    };

    // kmer
    cursor.tagged("section")?;
    cursor.section = "kmer";
    let tokens = cursor.tagged("k")?;
    if tokens.len() != 7 {
        return Err(cursor.fail("malformed k line"));
    }
    let kmer_table = {
        let k = cursor.parse_usize(tokens[0])?;
        let pseudocount = cursor.parse_f64(tokens[2])?;
        let table_families = cursor.parse_usize(tokens[4])?;
        let distinct = cursor.parse_usize(tokens[6])?;
        let tokens = cursor.tagged("entries")?;
        let entries =
            cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
        let mut weights = std::collections::BTreeMap::new();
        for _ in 0..entries {
            let tokens = cursor.tagged("kmer")?;
            if tokens.len() != 1 + table_families {
                return Err(cursor.fail("kmer entry has the wrong arity"));
            }
            weights.insert(tokens[0].to_string(), cursor.reals(&tokens[1..])?);
        }
        KmerWeightTable {
            k,
            pseudocount,
            n_families: table_families,
            distinct_kmers: distinct,
            weights,
        }
    };

    // svm
    cursor.tagged("section")?;
    cursor.section = "svm";
    let tokens = cursor.tagged("c")?;
    if tokens.len() != 5 {
        return Err(cursor.fail("malformed c line"));
    }
    let svm = {
        let c = cursor.parse_f64(tokens[0])?;
        let dim = cursor.parse_usize(tokens[2])?;
        let n_machines = cursor.parse_usize(tokens[4])?;
        let mut machines = Vec::with_capacity(n_machines);
        for _ in 0..n_machines {
            let tokens = cursor.tagged("machine")?;
            if tokens.len() != 1 + dim {
                return Err(cursor.fail("machine line has the wrong arity"));
            }
            machines.push(BinarySvm {
                bias: cursor.parse_f64(tokens[0])?,
                weights: cursor.reals(&tokens[1..])?,
            });
        }
        SvmModel { dim, c, machines }
    };

    // mlp
    cursor.tagged("section")?;
    cursor.section = "mlp";
    let tokens = cursor.tagged("sizes")?;
    let n_sizes = cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
    if tokens.len() != 1 + n_sizes {
        return Err(cursor.fail("sizes line has the wrong arity"));
    }
    let layer_sizes: Vec<usize> = tokens[1..]
        .iter()
        .map(|t| cursor.parse_usize(t))
        .collect::<Result<_>>()?;
    let tokens = cursor.tagged("learning_rate")?;
    if tokens.len() != 5 {
        return Err(cursor.fail("malformed learning_rate line"));
    }
    let mlp_config = MlpConfig {
        layer_sizes: layer_sizes.clone(),
        learning_rate: cursor.parse_f64(tokens[0])?,
        epochs: cursor.parse_usize(tokens[2])?,
        seed: cursor.parse_u64(tokens[4])?,
    };
    let mut layers = Vec::with_capacity(layer_sizes.len().saturating_sub(1));
    for _ in 0..layer_sizes.len().saturating_sub(1) {
        let tokens = cursor.tagged("layer")?;
        if tokens.len() != 2 {
            return Err(cursor.fail("layer line needs in and out dims"));
        }
        let in_dim = cursor.parse_usize(tokens[0])?;
        let out_dim = cursor.parse_usize(tokens[1])?;
        let mut weights = Vec::with_capacity(in_dim * out_dim);
        for _ in 0..out_dim {
            let tokens = cursor.tagged("w")?;
            if tokens.len() != in_dim {
                return Err(cursor.fail("weight row has the wrong arity"));
            }
            weights.extend(cursor.reals(&tokens)?);
        }
        let tokens = cursor.tagged("b")?;
        if tokens.len() != out_dim {
            return Err(cursor.fail("bias row has the wrong arity"));
        }
        layers.push(Layer {
            in_dim,
            out_dim,
            weights,
            biases: cursor.reals(&tokens)?,
        });
    }
    let mlp = MlpModel {
        layers,
        config: mlp_config,
    };

    // rough
    cursor.tagged("section")?;
    cursor.section = "rough";
    let tokens = cursor.tagged("bins")?;
    if tokens.len() != 3 || tokens[1] != "attrs" {
        return Err(cursor.fail("malformed bins line"));
    }
    let bins = cursor.parse_usize(tokens[0])?;
    let n_attrs = cursor.parse_usize(tokens[2])?;
    let mut boundaries = Vec::with_capacity(n_attrs);
    for _ in 0..n_attrs {
        let tokens = cursor.tagged("cuts")?;
        let count =
            cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
        if tokens.len() != 1 + count {
            return Err(cursor.fail("cuts line has the wrong arity"));
        }
        boundaries.push(cursor.reals(&tokens[1..])?);
    }
    let tokens = cursor.tagged("reduct")?;
    let reduct_len =
        cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
    if tokens.len() != 1 + reduct_len + 2 || tokens[1 + reduct_len] != "gamma" {
        return Err(cursor.fail("malformed reduct line"));
    }
    let reduct = Reduct {
        attrs: tokens[1..1 + reduct_len]
            .iter()
            .map(|t| cursor.parse_usize(t))
            .collect::<Result<_>>()?,
        gamma: cursor.parse_f64(tokens[2 + reduct_len])?,
    };
    let tokens = cursor.tagged("rules")?;
    let n_rules = cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
    let mut rules = Vec::with_capacity(n_rules);
    for _ in 0..n_rules {
        let tokens = cursor.tagged("rule")?;
        if tokens.len() < 3 {
            return Err(cursor.fail("rule line too short"));
        }
        let label = cursor.parse_usize(tokens[0])?;
        let support = cursor.parse_usize(tokens[1])?;
        let n_conds = cursor.parse_usize(tokens[2])?;
        if tokens.len() != 3 + 2 * n_conds {
            return Err(cursor.fail("rule conditions have the wrong arity"));
        }
        let mut conditions = Vec::with_capacity(n_conds);
        for pair in tokens[3..].chunks(2) {
            conditions.push((cursor.parse_usize(pair[0])?, cursor.parse_u16(pair[1])?));
        }
        rules.push(Rule {
            conditions,
            label,
            support,
        });
    }
    let tokens = cursor.tagged("rows")?;
    let n_rows = cursor.parse_usize(tokens.first().ok_or_else(|| cursor.fail("missing count"))?)?;
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let tokens = cursor.tagged("row")?;
        if tokens.len() != 1 + n_attrs {
            return Err(cursor.fail("row line has the wrong arity"));
        }
        let label = cursor.parse_usize(tokens[0])?;
        let bins_row = tokens[1..]
            .iter()
            .map(|t| cursor.parse_u16(t))
            .collect::<Result<_>>()?;
        rows.push((bins_row, label));
    }
    cursor.section = "footer";
    let end = cursor.line()?;
    if end != "end" {
        return Err(cursor.fail(format!("expected 'end', found '{end}'")));
    }
    if cursor.lines.next().is_some() {
        return Err(cursor.fail("trailing data after 'end'"));
    }

    let bundle = ModelBundle {
        families,
        kb,
        artmap,
        kmer_table,
        svm,
        mlp,
        rough: RoughArtifacts {
            table: DecisionTable {
                rows,
                n_attrs,
                bins,
                boundaries,
            },
            reduct,
            rules: RuleBase { rules },
        },
        train_config,
    };
    validate(&bundle)?;
    Ok(bundle)
}

/// Read and validate a bundle file.
pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    bundle_from_str(&text)
}

fn validate(bundle: &ModelBundle) -> Result<()> {
    let n = bundle.families.len();
    let fail = |msg: String| Err(Error::Validation(msg));

    if n == 0 {
        return fail("bundle has no families".into());
    }
    let mut sorted = bundle.families.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != n {
        return fail("duplicate family names".into());
    }

    let dim = PhysicoFeatures::LEN;
    if bundle.kb.bands.len() != n {
        return fail("knowledge base and family list disagree".into());
    }
    for (band, family) in bundle.kb.bands.iter().zip(&bundle.families) {
        if &band.family != family {
            return fail(format!(
                "band family '{}' does not match '{family}'",
                band.family
            ));
        }
        if band.bands.len() != dim {
            return fail(format!("family '{family}' has {} bands", band.bands.len()));
        }
        for &(lo, hi) in &band.bands {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return fail(format!("family '{family}' has an invalid band [{lo}, {hi}]"));
            }
        }
    }
    if bundle.kb.scaler.len() != dim {
        return fail("scaler dimensionality is wrong".into());
    }
    for &(lo, hi) in &bundle.kb.scaler {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return fail(format!("invalid scaler entry [{lo}, {hi}]"));
        }
    }

    if bundle.artmap.dim != dim {
        return fail("ARTMAP dimensionality is wrong".into());
    }
    for cat in &bundle.artmap.categories {
        if cat.label >= n {
            return fail(format!("ARTMAP category label {} out of range", cat.label));
        }
        if cat.weights.len() != 2 * dim {
            return fail("ARTMAP category weight length is wrong".into());
        }
        if cat.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return fail("ARTMAP weights must lie in [0, 1]".into());
        }
    }

    if bundle.kmer_table.n_families != n {
        return fail("k-mer table family count is wrong".into());
    }
    if bundle.kmer_table.k < 2 {
        return fail("k-mer length must be >= 2".into());
    }
    for (kmer, weights) in &bundle.kmer_table.weights {
        if weights.len() != n || weights.iter().any(|w| !w.is_finite()) {
            return fail(format!("k-mer '{kmer}' has invalid weights"));
        }
    }

    if bundle.svm.machines.len() != n {
        return fail("SVM machine count is wrong".into());
    }
    for machine in &bundle.svm.machines {
        if machine.weights.len() != bundle.svm.dim
            || !machine.bias.is_finite()
            || machine.weights.iter().any(|w| !w.is_finite())
        {
            return fail("SVM machine parameters are invalid".into());
        }
    }

    let sizes = &bundle.mlp.config.layer_sizes;
    if sizes.len() < 2 || bundle.mlp.layers.len() != sizes.len() - 1 {
        return fail("MLP layer structure is wrong".into());
    }
    if *sizes.last().expect("sizes is nonempty") != n {
        return fail("MLP output size does not match the family count".into());
    }
    for (layer, pair) in bundle.mlp.layers.iter().zip(sizes.windows(2)) {
        if layer.in_dim != pair[0] || layer.out_dim != pair[1] {
            return fail("MLP layer dimensions do not chain".into());
        }
        if layer.weights.len() != layer.in_dim * layer.out_dim
            || layer.biases.len() != layer.out_dim
        {
            return fail("MLP parameter lengths are wrong".into());
        }
        if layer
            .weights
            .iter()
            .chain(&layer.biases)
            .any(|v| !v.is_finite())
        {
            return fail("MLP parameters must be finite".into());
        }
    }

    let table = &bundle.rough.table;
    if table.n_attrs != dim || table.boundaries.len() != dim {
        return fail("rough-set table dimensionality is wrong".into());
    }
    for (bins_row, label) in &table.rows {
        if bins_row.len() != dim {
            return fail("rough-set row arity is wrong".into());
        }
        if *label >= n {
            return fail(format!("rough-set row label {label} out of range"));
        }
    }
    for &attr in &bundle.rough.reduct.attrs {
        if attr >= dim {
            return fail(format!("reduct attribute {attr} out of range"));
        }
    }
    for rule in &bundle.rough.rules.rules {
        if rule.label >= n {
            return fail(format!("rule label {} out of range", rule.label));
        }
        for &(attr, _) in &rule.conditions {
            if !bundle.rough.reduct.attrs.contains(&attr) {
                return fail(format!("rule condition on non-reduct attribute {attr}"));
            }
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_synth, SynthSpec};
    use crate::train::{train_bundle, TrainConfig};

    fn trained_bundle() -> ModelBundle {
        let corpus = gen_synth(&SynthSpec {
            families: 3,
            per_family: 8,
            len_min: 30,
            len_max: 40,
            motifs_per_family: 2,
            motif_len: 5,
            seed: 19,
        })
        .unwrap();
        let cfg = TrainConfig {
            epochs: 10,
            hidden: 6,
            ..TrainConfig::default()
        };
        train_bundle(&corpus, &cfg).unwrap()
    }

    #[test]
    fn round_trip_preserves_every_component() {
        let bundle = trained_bundle();
        let text = bundle_to_string(&bundle);
        let reloaded = bundle_from_str(&text).unwrap();
        assert_eq!(bundle, reloaded);
    }

    #[test]
    fn serialization_is_byte_stable() {
        let bundle = trained_bundle();
        assert_eq!(bundle_to_string(&bundle), bundle_to_string(&bundle));
    }

    #[test]
    fn wrong_version_tag_is_a_version_error() {
        let bundle = trained_bundle();
        let text = bundle_to_string(&bundle).replacen("CPSC1", "CPSC9", 1);
        match bundle_from_str(&text) {
            Err(Error::Version { found, expected }) => {
                assert_eq!(found, "CPSC9");
                assert_eq!(expected, "CPSC1");
            }
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn truncation_is_a_parse_error() {
        let bundle = trained_bundle();
        let text = bundle_to_string(&bundle);
        let truncated: String = text.lines().take(text.lines().count() / 2).collect::<Vec<_>>().join("\n");
        match bundle_from_str(&truncated) {
            Err(Error::BundleParse { .. }) => {}
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn corrupted_weights_fail_validation() {
        let mut bundle = trained_bundle();
        bundle.artmap.categories[0].weights[0] = 7.0;
        let text = bundle_to_string(&bundle);
        match bundle_from_str(&text) {
            Err(Error::Validation(_)) => {}
            other => panic!("unexpected result {other:?}"),
        }
    }

    #[test]
    fn save_and_load_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.cpsc");
        let bundle = trained_bundle();
        save_bundle(&bundle, &path).unwrap();
        let reloaded = load_bundle(&path).unwrap();
        assert_eq!(bundle, reloaded);
    }

    #[test]
    fn unwritable_path_surfaces_the_path() {
        let bundle = trained_bundle();
        let err = save_bundle(&bundle, "/nonexistent-dir/model.cpsc").unwrap_err();
        match err {
            Error::Io { path, .. } => assert!(path.contains("nonexistent-dir")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}

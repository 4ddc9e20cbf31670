//! Seeded generator of labeled artifact pairs. Each pair is rendered from one
//! blueprint; the second member differs from the first along exactly one
//! pattern axis.

pub mod classes;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::archive::{write_in_order, ArchiveEntry, DosDateTime, PackageModel};
use crate::classfile::{duplicate_entry, permute_pool, serialize_class, AttrBody, ClassModel};
use crate::patterns::PatternId;
use classes::{plain_class, widget_class, WidgetShape, WidgetVariant, SLOT_LAYOUTS};

/// Fixed level used for fixture archives, mimicking a stock archiver.
const FIXTURE_LEVEL: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixtureSpec {
    pub pattern: PatternId,
    pub seed: u64,
    /// Accessor methods in the generated widget class (at least 2).
    pub methods: usize,
    /// String constants in the widget class; grows its constant pool.
    pub strings: usize,
    /// Plain classes beside the widget.
    pub classes: usize,
    /// Lines in the generated documentation index.
    pub doc_lines: usize,
}

impl FixtureSpec {
    pub fn new(pattern: PatternId, seed: u64) -> Self {
        FixtureSpec { pattern, seed, methods: 3, strings: 5, classes: 2, doc_lines: 6 }
    }
}

#[derive(Clone, Debug, Default)]
struct ClassEdits {
    method_order: Option<u64>,
    inner_order: Option<u64>,
    pool_order: Option<u64>,
}

/// Everything needed to render one package. Perturbations edit fields; the
/// rest stays as the base drew it.
#[derive(Clone, Debug)]
struct Blueprint {
    module: String,
    shape: WidgetShape,
    variant: WidgetVariant,
    edits: ClassEdits,
    plain: Vec<(String, String, String, u16)>,
    built_by: String,
    build_jdk: String,
    exports: Vec<String>,
    pom_timestamp: String,
    git_ahead: String,
    doc_lines: Vec<String>,
    jsp_dependants: bool,
    mtime: DosDateTime,
    mtime_jitter: Option<u64>,
    entry_order: Option<u64>,
}

const WORDS: &[&str] = &[
    "alpha", "bravo", "cargo", "delta", "ember", "fjord", "gamma", "harbor", "index", "jolt", "kiln", "lumen", "meadow", "nectar", "orbit",
    "pilot", "quartz", "ripple", "summit", "tundra", "umber", "vertex", "willow",
];
const ACCESSORS: &[&str] = &[
    "withResourceRequirementObject",
    "withAPIServiceObject",
    "describe",
    "getName",
    "getLabel",
    "toDisplay",
    "resolveTarget",
    "currentState",
    "encodeKey",
    "formatValue",
    "lookupOwner",
    "summary",
];
const USERS: &[&str] = &["runner", "jenkins", "builder", "ci", "alice", "?", "travis"];
const JDKS: &[&str] = &["1.8.0_292", "1.8.0_302", "11.0.11", "1.8.0_265", "17.0.2"];
const DAYS: &[&str] = &["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];
const MONTHS: &[&str] = &["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

fn word(rng: &mut ChaCha8Rng) -> &'static str {
    WORDS.choose(rng).expect("non-empty")
}

fn maven_date(rng: &mut ChaCha8Rng) -> String {
    format!(
        "{} {} {:02} {:02}:{:02}:{:02} EDT {}",
        DAYS.choose(rng).expect("non-empty"),
        MONTHS.choose(rng).expect("non-empty"),
        rng.gen_range(1..=28),
        rng.gen_range(0..24),
        rng.gen_range(0..60),
        rng.gen_range(0..60),
        rng.gen_range(2015..=2024)
    )
}

/// A shuffle of `0..n` that is not the identity when `n >= 2`.
pub fn non_identity_shuffle(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut rng);
    if n >= 2 && v.iter().enumerate().all(|(i, &x)| i == x) {
        v.rotate_left(1);
    }
    v
}

fn reorder<T>(items: &mut Vec<T>, seed: u64) {
    let perm = non_identity_shuffle(items.len(), seed);
    let mut old: Vec<Option<T>> = std::mem::take(items).into_iter().map(Some).collect();
    *items = perm.into_iter().map(|i| old[i].take().expect("permutation")).collect();
}

fn pick_other<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str], current: &str) -> &'a str {
    loop {
        let c = pool.choose(rng).expect("non-empty");
        if *c != current {
            return c;
        }
    }
}

impl Blueprint {
    fn base(spec: &FixtureSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let module = format!("{}{}", word(&mut rng), spec.seed % 1000);
        let class_name = format!("com/example/{module}/Widget");
        let mut accessors: Vec<String> =
            ACCESSORS.choose_multiple(&mut rng, spec.methods.clamp(2, ACCESSORS.len())).map(|s| s.to_string()).collect();
        accessors.sort_by_key(|_| rng.gen::<u32>());
        let strings = (0..spec.strings.max(3)).map(|k| format!("{}-{k}", word(&mut rng))).collect();
        let inner = vec![
            (format!("{class_name}$Builder"), "Builder".to_string(), 0x0009),
            (format!("{class_name}$Mode"), "Mode".to_string(), 0x4019),
            (format!("{class_name}$Entry"), "Entry".to_string(), 0x0008),
        ];
        let shape =
            WidgetShape { class_name, accessors, strings, increment: rng.gen_range(2..5000), line_base: rng.gen_range(10..400), inner };
        let mut plain = vec![
            (format!("com/example/{module}/Bar"), "bar".to_string(), word(&mut rng).to_string(), rng.gen_range(3..50)),
            (format!("com/example/{module}/Baz"), "baz".to_string(), word(&mut rng).to_string(), rng.gen_range(3..50)),
        ];
        for k in 2..spec.classes.max(2) {
            plain.push((format!("com/example/{module}/Helper{k}"), format!("help{k}"), word(&mut rng).to_string(), rng.gen_range(3..90)));
        }
        plain.truncate(spec.classes.max(2));
        let exports = (0..rng.gen_range(3..6))
            .map(|k| {
                let pkg = format!("com.example.{module}.{}{k}", word(&mut rng));
                if k % 2 == 0 {
                    format!("{pkg};uses:=\"com.example.{module},org.slf4j\";version=\"1.{k}.0\"")
                } else {
                    format!("{pkg};version=\"1.{k}.0\"")
                }
            })
            .collect();
        let doc_lines = {
            let mut v: Vec<String> = (0..spec.doc_lines.max(2)).map(|k| format!("com.example.{module}.{}{k}", word(&mut rng))).collect();
            v.sort();
            v
        };
        Blueprint {
            shape,
            variant: WidgetVariant::default(),
            edits: ClassEdits::default(),
            plain,
            built_by: USERS.choose(&mut rng).expect("non-empty").to_string(),
            build_jdk: JDKS.choose(&mut rng).expect("non-empty").to_string(),
            exports,
            pom_timestamp: maven_date(&mut rng),
            git_ahead: "0".into(),
            doc_lines,
            jsp_dependants: false,
            mtime: DosDateTime::from_parts(
                rng.gen_range(2015..2025),
                rng.gen_range(1..=12),
                rng.gen_range(1..=28),
                rng.gen_range(0..24),
                rng.gen_range(0..60),
                2 * rng.gen_range(0..30),
            ),
            mtime_jitter: None,
            entry_order: None,
            module,
        }
    }

    /// Moves this blueprint along one axis. The result always differs from
    /// the unperturbed blueprint.
    fn perturb(&mut self, p: PatternId, rng: &mut ChaCha8Rng) {
        use PatternId::*;
        match p {
            P1 => {
                let old = self.pom_timestamp.clone();
                while self.pom_timestamp == old {
                    self.pom_timestamp = maven_date(rng);
                }
                self.mtime_jitter = Some(rng.gen());
            }
            P2 => self.build_jdk = pick_other(rng, JDKS, &self.build_jdk).to_string(),
            P3 => self.git_ahead = if self.git_ahead == "NO_REMOTE" { "0".into() } else { "NO_REMOTE".into() },
            P4 => self.built_by = pick_other(rng, USERS, &self.built_by).to_string(),
            P5 => self.variant.line_shift += rng.gen_range(1..4),
            P6 => self.edits.pool_order = Some(rng.gen()),
            P7 => {
                let n = SLOT_LAYOUTS.len();
                self.variant.slot_layout = (self.variant.slot_layout + rng.gen_range(1..n)) % n;
            }
            P8 => reorder(&mut self.doc_lines, rng.gen()),
            P9 => self.edits.inner_order = Some(rng.gen()),
            P10 => self.edits.method_order = Some(rng.gen()),
            P11 => self.entry_order = Some(rng.gen()),
            P12 => reorder(&mut self.exports, rng.gen()),
            P13 => self.jsp_dependants = !self.jsp_dependants,
            P14 => self.variant.swap_lambdas = !self.variant.swap_lambdas,
            Unknown => {}
        }
    }

    fn widget(&self) -> ClassModel {
        let mut m = widget_class(&self.shape, &self.variant);
        if let Some(seed) = self.edits.method_order {
            reorder(&mut m.methods, seed);
        }
        if let Some(seed) = self.edits.inner_order {
            for a in &mut m.attributes {
                if let AttrBody::InnerClasses(v) = &mut a.body {
                    reorder(v, seed);
                }
            }
        }
        if let Some(seed) = self.edits.pool_order {
            m = perturb_pool(&m, seed);
        }
        m
    }

    fn manifest(&self) -> String {
        let exports = self.exports.join(",");
        let attrs = [
            ("Manifest-Version", "1.0".to_string()),
            ("Archiver-Version", "Plexus Archiver".to_string()),
            ("Built-By", self.built_by.clone()),
            ("Created-By", "Apache Maven 3.8.1".to_string()),
            ("Build-Jdk", self.build_jdk.clone()),
            ("Implementation-Title", format!("{}-core", self.module)),
            ("Export-Package", exports),
        ];
        let mut m = crate::textformats::ManifestModel::default();
        m.main_section.attributes = attrs.iter().map(|(k, v)| crate::textformats::Attribute::new(*k, v.clone())).collect();
        String::from_utf8(m.to_canonical_bytes()).expect("ascii manifest")
    }

    fn jsp_source(&self) -> String {
        let mut s = String::from(
            "package org.apache.jsp;\n\npublic final class index_jsp extends org.apache.jasper.runtime.HttpJspBase {\n\n  private static final javax.servlet.jsp.JspFactory _jspxFactory =\n          javax.servlet.jsp.JspFactory.getDefaultFactory();\n\n",
        );
        if self.jsp_dependants {
            s.push_str(
                "  private static java.util.Map<java.lang.String,java.lang.Long> _jspx_dependants;\n\n  static {\n    _jspx_dependants = new java.util.HashMap<java.lang.String,java.lang.Long>(1);\n    _jspx_dependants.put(\"/WEB-INF/tags/layout.tag\", Long.valueOf(1611234567000L));\n  }\n\n",
            );
        }
        s.push_str("  public void _jspService() {\n  }\n}\n");
        s
    }

    fn entries(&self) -> Vec<ArchiveEntry> {
        let dir = format!("com/example/{}/", self.module);
        let mut entries = vec![
            ArchiveEntry::new("META-INF/", Vec::new()),
            ArchiveEntry::new("META-INF/MANIFEST.MF", self.manifest().into_bytes()),
            ArchiveEntry::new("com/", Vec::new()),
            ArchiveEntry::new("com/example/", Vec::new()),
            ArchiveEntry::new(dir.clone(), Vec::new()),
            ArchiveEntry::new(format!("{}.class", self.shape.class_name), serialize_class(&self.widget())),
        ];
        for (name, method, value, line) in &self.plain {
            entries.push(ArchiveEntry::new(format!("{name}.class"), serialize_class(&plain_class(name, method, value, *line))));
        }
        let pom = format!(
            "#Generated by Maven\n#{}\ngroupId=com.example\nartifactId={}-core\nversion=1.0.{}\n",
            self.pom_timestamp, self.module, self.shape.line_base
        );
        entries.push(ArchiveEntry::new(format!("META-INF/maven/com.example/{}-core/pom.properties", self.module), pom.into_bytes()));
        let git = format!(
            "{{\n  \"git.branch\" : \"main\",\n  \"git.commit.id.abbrev\" : \"{:07x}\",\n  \"git.local.branch.ahead\" : \"{}\",\n  \"git.local.branch.behind\" : \"0\"\n}}\n",
            self.shape.increment,
            self.git_ahead
        );
        entries.push(ArchiveEntry::new("git.json", git.into_bytes()));
        let mut docs = self.doc_lines.join("\n");
        docs.push('\n');
        entries.push(ArchiveEntry::new("apidocs/package-list", docs.into_bytes()));
        entries.push(ArchiveEntry::new("org/apache/jsp/index_jsp.java", self.jsp_source().into_bytes()));

        let mut rng = self.mtime_jitter.map(ChaCha8Rng::seed_from_u64);
        let base = self.mtime.to_unix_seconds();
        for e in &mut entries {
            e.mtime = match rng.as_mut() {
                Some(r) => DosDateTime::from_unix_seconds(base + 2 * r.gen_range(1..100_000)),
                None => self.mtime,
            };
        }
        if let Some(seed) = self.entry_order {
            reorder(&mut entries, seed);
        }
        entries
    }

    fn render(&self) -> Vec<u8> {
        let pkg = PackageModel::from_entries(self.entries());
        write_in_order(&pkg, FIXTURE_LEVEL).expect("fixture archive fits")
    }
}

/// Permutes the pool and then duplicates one entry; the permutation is never
/// the identity, so the serialized pool always changes.
pub fn perturb_pool(m: &ClassModel, seed: u64) -> ClassModel {
    let n = m.constant_pool.indices().count();
    let order = non_identity_shuffle(n, seed);
    let permuted = permute_pool(m, &order).expect("permutation of present entries");
    let indices: Vec<u16> = permuted.constant_pool.indices().collect();
    let target = indices[(seed as usize / 7) % indices.len()];
    duplicate_entry(&permuted, target).expect("duplicate present entry").0
}

/// Renders the labeled pair for `spec`: `(first, second, label)`.
pub fn generate_pair(spec: &FixtureSpec) -> (Vec<u8>, Vec<u8>, PatternId) {
    assert!(spec.pattern != PatternId::Unknown, "fixture pairs need a concrete pattern");
    let base = Blueprint::base(spec);
    let mut other = base.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_0fa1);
    other.perturb(spec.pattern, &mut rng);
    (base.render(), other.render(), spec.pattern)
}

/// One package drawn from `seed`, perturbed along every axis in `patterns`
/// with randomness from `entropy`. Stands in for a build whose output varies
/// from run to run.
pub fn nondeterministic_package(seed: u64, entropy: u64, patterns: &[PatternId]) -> Vec<u8> {
    let mut bp = Blueprint::base(&FixtureSpec::new(PatternId::P1, seed));
    let mut rng = ChaCha8Rng::seed_from_u64(entropy);
    for &p in patterns {
        bp.perturb(p, &mut rng);
    }
    bp.render()
}

/// The two-class jar pair: the second build lists `Baz.class` before
/// `Bar.class` and carries a different timestamp in `pom.properties`.
pub fn running_example() -> (Vec<u8>, Vec<u8>) {
    let build = |stamp: &str, baz_first: bool, mtime: DosDateTime| {
        let first = serialize_class(&plain_class("Bar", "name", "bar", 3));
        let second = serialize_class(&plain_class("Baz", "name", "baz", 3));
        let manifest = b"Manifest-Version: 1.0\r\nCreated-By: Apache Maven 3.8.1\r\nBuild-Jdk: 1.8.0_292\r\n\r\n".to_vec();
        let pom = format!("#Generated by Maven\n# {stamp}\ngroupId=org.example\nartifactId=foo\nversion=1.0\n");
        let mut classes = vec![ArchiveEntry::new("Bar.class", first), ArchiveEntry::new("Baz.class", second)];
        if baz_first {
            classes.reverse();
        }
        let mut entries = vec![ArchiveEntry::new("META-INF/", Vec::new()), ArchiveEntry::new("META-INF/MANIFEST.MF", manifest)];
        entries.extend(classes);
        entries.push(ArchiveEntry::new("META-INF/maven/org.example/foo/pom.properties", pom.into_bytes()));
        let entries = entries.into_iter().map(|e| e.with_mtime(mtime)).collect();
        write_in_order(&PackageModel::from_entries(entries), FIXTURE_LEVEL).expect("small archive")
    };
    (
        build("Sun Sep 18 22:43:23 EDT 2021", false, DosDateTime::from_parts(2021, 9, 18, 22, 43, 22)),
        build("Mon Sep 19 09:12:05 EDT 2021", true, DosDateTime::from_parts(2021, 9, 19, 9, 12, 4)),
    )
}

/// Three class files: `b` is `a` with a perturbed constant pool, `c` is `b`
/// with its methods reordered.
pub fn chained_triple(seed: u64) -> [Vec<u8>; 3] {
    let bp = Blueprint::base(&FixtureSpec::new(PatternId::P6, seed));
    let a = bp.widget();
    let b = perturb_pool(&a, seed);
    let mut c = b.clone();
    reorder(&mut c.methods, seed.wrapping_add(1));
    [serialize_class(&a), serialize_class(&b), serialize_class(&c)]
}

/// The widget class of the pair's first member, for class-level checks.
pub fn widget_of(spec: &FixtureSpec) -> ClassModel {
    Blueprint::base(spec).widget()
}

/// A class whose constant pool holds exactly six entries:
/// two classes, their names, and a field name and descriptor.
pub fn six_entry_class(class_name: &str, field: &str, descriptor: &str) -> ClassModel {
    let mut b = crate::classfile::builder::ClassBuilder::new(class_name, "java/lang/Object");
    b.add_field(0x0001, field, descriptor);
    b.build()
}

/// At least `n` distinct class files drawn from the fixture shapes: widget
/// variants along every class axis plus plain classes.
pub fn class_corpus(n: usize, seed: u64) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut k = 0u64;
    while out.len() < n {
        let spec = FixtureSpec {
            methods: 2 + (k % 5) as usize,
            strings: 3 + (k % 7) as usize,
            ..FixtureSpec::new(PatternId::P6, seed.wrapping_add(k))
        };
        let mut bp = Blueprint::base(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        let axis = [PatternId::P5, PatternId::P6, PatternId::P7, PatternId::P9, PatternId::P10, PatternId::P14][(k % 6) as usize];
        out.push((format!("{}.class", bp.shape.class_name), serialize_class(&bp.widget())));
        bp.perturb(axis, &mut rng);
        out.push((format!("{}-{axis}.class", bp.shape.class_name), serialize_class(&bp.widget())));
        for (name, method, value, line) in &bp.plain {
            out.push((format!("{name}-{k}.class"), serialize_class(&plain_class(name, method, value, *line))));
        }
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archive::read_package;

    #[test]
    fn same_spec_same_bytes() {
        for p in PatternId::ALL {
            let spec = FixtureSpec::new(p, 42);
            let (a1, b1, l1) = generate_pair(&spec);
            let (a2, b2, l2) = generate_pair(&spec);
            assert_eq!((a1.clone(), b1.clone(), l1), (a2, b2, l2));
            assert_ne!(a1, b1, "{p} pair must differ");
        }
    }

    #[test]
    fn entry_order_pair_has_same_multiset() {
        let (a, b, _) = generate_pair(&FixtureSpec::new(PatternId::P11, 1));
        let (pa, pb) = (read_package(&a).unwrap(), read_package(&b).unwrap());
        let mut na: Vec<_> = pa.entries.iter().map(|e| (e.name.clone(), e.payload.clone())).collect();
        let mut nb: Vec<_> = pb.entries.iter().map(|e| (e.name.clone(), e.payload.clone())).collect();
        assert_ne!(na, nb);
        na.sort();
        nb.sort();
        assert_eq!(na, nb);
    }

    #[test]
    fn only_the_labeled_entry_changes() {
        let expect: &[(PatternId, &[&str])] = &[
            (PatternId::P2, &["META-INF/MANIFEST.MF"]),
            (PatternId::P3, &["git.json"]),
            (PatternId::P4, &["META-INF/MANIFEST.MF"]),
            (PatternId::P8, &["apidocs/package-list"]),
            (PatternId::P12, &["META-INF/MANIFEST.MF"]),
            (PatternId::P13, &["org/apache/jsp/index_jsp.java"]),
        ];
        for (p, names) in expect {
            let (a, b, _) = generate_pair(&FixtureSpec::new(*p, 9));
            let (pa, pb) = (read_package(&a).unwrap(), read_package(&b).unwrap());
            let changed: Vec<_> = pa
                .entries
                .iter()
                .zip(&pb.entries)
                .filter(|(x, y)| x.payload != y.payload || x.mtime != y.mtime || x.name != y.name)
                .map(|(x, _)| x.name.as_str())
                .collect();
            assert_eq!(&changed, names, "{p}");
        }
    }

    #[test]
    fn class_axes_touch_only_the_widget() {
        for p in [PatternId::P5, PatternId::P6, PatternId::P7, PatternId::P9, PatternId::P10, PatternId::P14] {
            let (a, b, _) = generate_pair(&FixtureSpec::new(p, 3));
            let (pa, pb) = (read_package(&a).unwrap(), read_package(&b).unwrap());
            let changed: Vec<_> =
                pa.entries.iter().zip(&pb.entries).filter(|(x, y)| x.payload != y.payload).map(|(x, _)| x.name.clone()).collect();
            assert_eq!(changed.len(), 1, "{p}");
            assert!(changed[0].ends_with("Widget.class"), "{p}");
        }
    }

    #[test]
    fn six_entry_pool() {
        assert_eq!(six_entry_class("T", "v", "I").constant_pool.indices().count(), 6);
    }

    #[test]
    fn corpus_is_large_and_distinct() {
        let c = class_corpus(210, 5);
        assert!(c.len() >= 210);
        let mut bytes: Vec<_> = c.iter().map(|(_, b)| b.clone()).collect();
        bytes.sort();
        bytes.dedup();
        assert!(bytes.len() >= 200);
    }

    #[test]
    fn shuffle_is_never_identity() {
        for seed in 0..200 {
            let v = non_identity_shuffle(2 + (seed % 4) as usize, seed);
            assert!(v.iter().enumerate().any(|(i, &x)| i != x));
        }
        assert_eq!(non_identity_shuffle(1, 0), vec![0]);
    }
}

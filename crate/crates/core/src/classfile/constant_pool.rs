use serde::{Deserialize, Serialize};

/// The 17 constant-pool tags of the class-file format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CpTag {
    Utf8 = 1,
    Integer = 3,
    Float = 4,
    Long = 5,
    Double = 6,
    Class = 7,
    String = 8,
    Fieldref = 9,
    Methodref = 10,
    InterfaceMethodref = 11,
    NameAndType = 12,
    MethodHandle = 15,
    MethodType = 16,
    Dynamic = 17,
    InvokeDynamic = 18,
    Module = 19,
    Package = 20,
}

impl CpTag {
    pub fn from_u8(tag: u8) -> Option<CpTag> {
        use CpTag::*;
        Some(match tag {
            1 => Utf8,
            3 => Integer,
            4 => Float,
            5 => Long,
            6 => Double,
            7 => Class,
            8 => String,
            9 => Fieldref,
            10 => Methodref,
            11 => InterfaceMethodref,
            12 => NameAndType,
            15 => MethodHandle,
            16 => MethodType,
            17 => Dynamic,
            18 => InvokeDynamic,
            19 => Module,
            20 => Package,
            _ => return None,
        })
    }
}

/// One constant. Float and double payloads are raw IEEE bit patterns, so
/// distinct NaNs stay distinct.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CpEntry {
    Utf8(Vec<u8>),
    Integer(i32),
    Float(u32),
    Long(i64),
    Double(u64),
    Class(u16),
    String(u16),
    Fieldref { class: u16, name_and_type: u16 },
    Methodref { class: u16, name_and_type: u16 },
    InterfaceMethodref { class: u16, name_and_type: u16 },
    NameAndType { name: u16, descriptor: u16 },
    MethodHandle { kind: u8, reference: u16 },
    MethodType(u16),
    Dynamic { bootstrap: u16, name_and_type: u16 },
    InvokeDynamic { bootstrap: u16, name_and_type: u16 },
    Module(u16),
    Package(u16),
}

impl CpEntry {
    pub fn tag(&self) -> CpTag {
        match self {
            CpEntry::Utf8(_) => CpTag::Utf8,
            CpEntry::Integer(_) => CpTag::Integer,
            CpEntry::Float(_) => CpTag::Float,
            CpEntry::Long(_) => CpTag::Long,
            CpEntry::Double(_) => CpTag::Double,
            CpEntry::Class(_) => CpTag::Class,
            CpEntry::String(_) => CpTag::String,
            CpEntry::Fieldref { .. } => CpTag::Fieldref,
            CpEntry::Methodref { .. } => CpTag::Methodref,
            CpEntry::InterfaceMethodref { .. } => CpTag::InterfaceMethodref,
            CpEntry::NameAndType { .. } => CpTag::NameAndType,
            CpEntry::MethodHandle { .. } => CpTag::MethodHandle,
            CpEntry::MethodType(_) => CpTag::MethodType,
            CpEntry::Dynamic { .. } => CpTag::Dynamic,
            CpEntry::InvokeDynamic { .. } => CpTag::InvokeDynamic,
            CpEntry::Module(_) => CpTag::Module,
            CpEntry::Package(_) => CpTag::Package,
        }
    }

    pub fn is_wide(&self) -> bool {
        matches!(self, CpEntry::Long(_) | CpEntry::Double(_))
    }

    /// Pool indices this entry refers to, in field order.
    pub fn children(&self) -> Vec<u16> {
        match *self {
            CpEntry::Class(i) | CpEntry::String(i) | CpEntry::MethodType(i) | CpEntry::Module(i) | CpEntry::Package(i) => {
                vec![i]
            }
            CpEntry::Fieldref { class, name_and_type }
            | CpEntry::Methodref { class, name_and_type }
            | CpEntry::InterfaceMethodref { class, name_and_type } => vec![class, name_and_type],
            CpEntry::NameAndType { name, descriptor } => vec![name, descriptor],
            CpEntry::MethodHandle { reference, .. } => vec![reference],
            CpEntry::Dynamic { name_and_type, .. } | CpEntry::InvokeDynamic { name_and_type, .. } => vec![name_and_type],
            _ => Vec::new(),
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut u16> {
        match self {
            CpEntry::Class(i) | CpEntry::String(i) | CpEntry::MethodType(i) | CpEntry::Module(i) | CpEntry::Package(i) => {
                vec![i]
            }
            CpEntry::Fieldref { class, name_and_type }
            | CpEntry::Methodref { class, name_and_type }
            | CpEntry::InterfaceMethodref { class, name_and_type } => vec![class, name_and_type],
            CpEntry::NameAndType { name, descriptor } => vec![name, descriptor],
            CpEntry::MethodHandle { reference, .. } => vec![reference],
            CpEntry::Dynamic { name_and_type, .. } | CpEntry::InvokeDynamic { name_and_type, .. } => vec![name_and_type],
            _ => Vec::new(),
        }
    }
}

/// 1-based constant pool. Slot 0 and the slot after each long/double are `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstantPool {
    slots: Vec<Option<CpEntry>>,
}

impl Default for ConstantPool {
    fn default() -> Self {
        ConstantPool { slots: vec![None] }
    }
}

impl ConstantPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a pool from raw slots; slot 0 must be `None`.
    pub fn from_slots(slots: Vec<Option<CpEntry>>) -> Self {
        debug_assert!(slots.first().is_none_or(Option::is_none));
        ConstantPool { slots }
    }

    pub fn slots(&self) -> &[Option<CpEntry>] {
        &self.slots
    }

    pub(crate) fn slots_mut(&mut self) -> &mut Vec<Option<CpEntry>> {
        &mut self.slots
    }

    /// The `constant_pool_count` value: one more than the highest index.
    pub fn count(&self) -> u16 {
        self.slots.len() as u16
    }

    pub fn get(&self, index: u16) -> Option<&CpEntry> {
        self.slots.get(index as usize).and_then(Option::as_ref)
    }

    /// Appends an entry and returns its index. Long and double take two slots.
    pub fn push(&mut self, entry: CpEntry) -> u16 {
        let index = self.slots.len() as u16;
        let wide = entry.is_wide();
        self.slots.push(Some(entry));
        if wide {
            self.slots.push(None);
        }
        index
    }

    /// Index of an existing structurally identical entry, else a new one.
    pub fn intern(&mut self, entry: CpEntry) -> u16 {
        match self.slots.iter().position(|s| s.as_ref() == Some(&entry)) {
            Some(i) => i as u16,
            None => self.push(entry),
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = u16> + '_ {
        self.slots.iter().enumerate().filter(|(_, s)| s.is_some()).map(|(i, _)| i as u16)
    }

    pub fn utf8(&self, index: u16) -> Option<&[u8]> {
        match self.get(index) {
            Some(CpEntry::Utf8(b)) => Some(b),
            _ => None,
        }
    }

    pub fn utf8_lossy(&self, index: u16) -> String {
        self.utf8(index).map(|b| String::from_utf8_lossy(b).into_owned()).unwrap_or_default()
    }

    pub fn class_name(&self, index: u16) -> Option<String> {
        match self.get(index) {
            Some(CpEntry::Class(n)) => self.utf8(*n).map(|b| String::from_utf8_lossy(b).into_owned()),
            _ => None,
        }
    }

    /// Human-readable rendering in the style of a disassembler comment.
    pub fn describe(&self, index: u16) -> String {
        self.describe_depth(index, 0)
    }

    fn describe_depth(&self, index: u16, depth: u8) -> String {
        if depth > 6 {
            return "...".into();
        }
        let d = |i: u16| self.describe_depth(i, depth + 1);
        match self.get(index) {
            None if index == 0 => "<none>".into(),
            None => format!("<invalid #{index}>"),
            Some(e) => match e {
                CpEntry::Utf8(b) => String::from_utf8_lossy(b).into_owned(),
                CpEntry::Integer(v) => v.to_string(),
                CpEntry::Float(bits) => format!("{}f", f32::from_bits(*bits)),
                CpEntry::Long(v) => format!("{v}l"),
                CpEntry::Double(bits) => format!("{}d", f64::from_bits(*bits)),
                CpEntry::Class(n) => d(*n),
                CpEntry::String(n) => format!("\"{}\"", d(*n)),
                CpEntry::Fieldref { class, name_and_type }
                | CpEntry::Methodref { class, name_and_type }
                | CpEntry::InterfaceMethodref { class, name_and_type } => {
                    format!("{}.{}", d(*class), d(*name_and_type))
                }
                CpEntry::NameAndType { name, descriptor } => format!("{}:{}", d(*name), d(*descriptor)),
                CpEntry::MethodHandle { kind, reference } => format!("REF_{kind} {}", d(*reference)),
                CpEntry::MethodType(n) => d(*n),
                CpEntry::Dynamic { bootstrap, name_and_type } | CpEntry::InvokeDynamic { bootstrap, name_and_type } => {
                    format!("#{bootstrap}:{}", d(*name_and_type))
                }
                CpEntry::Module(n) | CpEntry::Package(n) => d(*n),
            },
        }
    }

    /// Checks that `index` holds one of `tags`. Index 0 passes only when `allow_zero`.
    pub(crate) fn expect(&self, index: u16, tags: &[CpTag], allow_zero: bool, what: &str) -> Result<(), super::ClassError> {
        if index == 0 && allow_zero {
            return Ok(());
        }
        match self.get(index) {
            Some(e) if tags.contains(&e.tag()) => Ok(()),
            Some(e) => Err(super::malformed(format!("{what}: #{index} is {:?}, expected one of {tags:?}", e.tag()))),
            None => Err(super::malformed(format!("{what}: constant pool index #{index} out of range"))),
        }
    }

    /// Verifies every pool-internal reference points at an entry of the required tag.
    pub(crate) fn validate(&self) -> Result<(), super::ClassError> {
        use CpTag::*;
        for i in self.indices() {
            let e = self.get(i).expect("index from indices()");
            let what = format!("constant #{i}");
            match *e {
                CpEntry::Class(n) | CpEntry::String(n) | CpEntry::MethodType(n) | CpEntry::Module(n) | CpEntry::Package(n) => {
                    self.expect(n, &[Utf8], false, &what)?
                }
                CpEntry::Fieldref { class, name_and_type } => {
                    self.expect(class, &[Class], false, &what)?;
                    self.expect(name_and_type, &[NameAndType], false, &what)?;
                }
                CpEntry::Methodref { class, name_and_type } | CpEntry::InterfaceMethodref { class, name_and_type } => {
                    self.expect(class, &[Class], false, &what)?;
                    self.expect(name_and_type, &[NameAndType], false, &what)?;
                }
                CpEntry::NameAndType { name, descriptor } => {
                    self.expect(name, &[Utf8], false, &what)?;
                    self.expect(descriptor, &[Utf8], false, &what)?;
                }
                CpEntry::MethodHandle { kind, reference } => {
                    let tags: &[CpTag] = match kind {
                        1..=4 => &[Fieldref],
                        5 | 8 => &[Methodref],
                        6 | 7 => &[Methodref, InterfaceMethodref],
                        9 => &[InterfaceMethodref],
                        _ => return Err(super::malformed(format!("{what}: bad method handle kind {kind}"))),
                    };
                    self.expect(reference, tags, false, &what)?;
                }
                CpEntry::Dynamic { name_and_type, .. } | CpEntry::InvokeDynamic { name_and_type, .. } => {
                    self.expect(name_and_type, &[NameAndType], false, &what)?
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Tags accepted by `ldc`/`ldc_w` and as bootstrap arguments.
pub(crate) const LOADABLE: &[CpTag] = &[
    CpTag::Integer,
    CpTag::Float,
    CpTag::Long,
    CpTag::Double,
    CpTag::String,
    CpTag::Class,
    CpTag::MethodHandle,
    CpTag::MethodType,
    CpTag::Dynamic,
];

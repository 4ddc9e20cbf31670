//! Synthetic class files for fixtures. Every variant of a shape interns the
//! same constants in the same order, so variants share one constant pool
//! unless a pool perturbation is requested.

use crate::classfile::builder::{compress_frame, ClassBuilder, CodeAsm, CodeParts};
use crate::classfile::{AttrBody, ClassModel, LineNumber, LocalVariable, StackMapFrame, VType};

const OBJECT: &str = "java/lang/Object";
const STRING: &str = "java/lang/String";

/// Placement of the three non-parameter locals of `compute(IJ)J`:
/// (two-slot accumulator, loop counter, string). Slots 0..=3 hold parameters.
pub const SLOT_LAYOUTS: [(u16, u16, u16); 6] = [(4, 6, 7), (4, 7, 6), (5, 4, 7), (5, 7, 4), (6, 4, 5), (6, 5, 4)];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WidgetShape {
    pub class_name: String,
    /// Names of the `()Ljava/lang/String;` accessor methods, in declaration order.
    pub accessors: Vec<String>,
    pub strings: Vec<String>,
    pub increment: i64,
    pub line_base: u16,
    pub inner: Vec<(String, String, u16)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WidgetVariant {
    pub slot_layout: usize,
    pub line_shift: u16,
    pub swap_lambdas: bool,
}

fn compute_body(b: &mut ClassBuilder, shape: &WidgetShape, variant: &WidgetVariant) -> CodeParts {
    let (acc, idx, text) = SLOT_LAYOUTS[variant.slot_layout % SLOT_LAYOUTS.len()];
    let k = b.long(shape.increment);
    let s = b.string(&shape.strings[0]);
    let length = b.methodref(STRING, "length", "()I");
    let mut a = CodeAsm::new();
    a.local(0x15, 1).op(0x85).local(0x16, 2).op(0x61).local(0x37, acc);
    let after_acc = a.pc();
    a.op(0x03).local(0x36, idx);
    let after_idx = a.pc();
    a.label("loop");
    a.local(0x15, idx).local(0x15, 1).branch(0xa2, "end");
    a.local(0x16, acc).op_u16(0x14, k).op(0x61).local(0x37, acc);
    a.iinc(idx, 1).branch(0xa7, "loop");
    a.label("end");
    a.ldc(s).local(0x3a, text);
    let after_text = a.pc();
    a.local(0x19, text).op_u16(0xb6, length).op(0x85).local(0x16, acc).op(0x61).op(0xad);
    let (code, labels) = a.finish();
    let (loop_pc, end_pc) = (labels["loop"], labels["end"]);
    let len = code.len() as u16;

    let this = VType::Object(b.this_class());
    let initial = vec![this, VType::Integer, VType::Long];
    let mut at_loop = initial.clone();
    let mut slot = 4;
    while slot < 8 {
        if slot == acc {
            at_loop.push(VType::Long);
            slot += 2;
        } else {
            at_loop.push(if slot == idx { VType::Integer } else { VType::Top });
            slot += 1;
        }
    }
    while at_loop.last() == Some(&VType::Top) {
        at_loop.pop();
    }
    let frames = vec![compress_frame(loop_pc, &initial, &at_loop, &[]), compress_frame(end_pc - loop_pc - 1, &at_loop, &at_loop, &[])];
    let lv = |b: &mut ClassBuilder, start: u16, name: &str, desc: &str, index: u16| LocalVariable {
        start_pc: start,
        length: len - start,
        name: b.utf8(name),
        descriptor: b.utf8(desc),
        index,
    };
    let this_desc = format!("L{};", shape.class_name);
    let locals = vec![
        lv(b, 0, "this", &this_desc, 0),
        lv(b, 0, "count", "I", 1),
        lv(b, 0, "seed", "J", 2),
        lv(b, after_acc, "acc", "J", acc),
        lv(b, after_idx, "i", "I", idx),
        lv(b, after_text, "label", &format!("L{STRING};"), text),
    ];
    let line = shape.line_base + variant.line_shift;
    CodeParts {
        max_stack: 4,
        max_locals: 8,
        code,
        exception_table: Vec::new(),
        lines: vec![
            LineNumber { start_pc: 0, line },
            LineNumber { start_pc: loop_pc, line: line + 1 },
            LineNumber { start_pc: end_pc, line: line + 3 },
        ],
        locals,
        frames,
    }
}

fn simple(code: Vec<u8>, max_stack: u16, max_locals: u16, line: u16) -> CodeParts {
    CodeParts {
        max_stack,
        max_locals,
        code,
        exception_table: Vec::new(),
        lines: vec![LineNumber { start_pc: 0, line }],
        locals: Vec::new(),
        frames: Vec::new(),
    }
}

/// Builds the widget class: constructor, a looping method with a two-slot
/// local and stack map frames, accessor methods, two lambdas reached through
/// `invokedynamic`, an inner-class table, and a source file attribute.
pub fn widget_class(shape: &WidgetShape, variant: &WidgetVariant) -> ClassModel {
    let name = shape.class_name.as_str();
    let mut b = ClassBuilder::new(name, OBJECT);
    b.add_interface("java/io/Serializable");
    b.add_field(0x0002, "total", "J");
    b.add_field(0x0012, "label", &format!("L{STRING};"));

    // Constructor.
    let init = b.methodref(OBJECT, "<init>", "()V");
    let mut a = CodeAsm::new();
    a.local(0x19, 0).op_u16(0xb7, init).op(0xb1);
    let parts = simple(a.finish().0, 1, 1, shape.line_base.saturating_sub(2));
    let code = parts.into_code(&mut b);
    b.add_method(0x0001, "<init>", "()V", Some(code));

    let parts = compute_body(&mut b, shape, variant);
    let code = parts.into_code(&mut b);
    b.add_method(0x0001, "compute", "(IJ)J", Some(code));

    for (k, accessor) in shape.accessors.iter().enumerate() {
        let s = b.string(&shape.strings[(k + 1) % shape.strings.len()]);
        let mut a = CodeAsm::new();
        a.ldc(s).op(0xb0);
        let parts = simple(a.finish().0, 1, 1, shape.line_base + 10 + k as u16 * 3);
        let code = parts.into_code(&mut b);
        b.add_method(0x0001, accessor, "()Ljava/lang/String;", Some(code));
    }

    // Lambdas and their call sites.
    let metafactory = b.methodref(
        "java/lang/invoke/LambdaMetafactory",
        "metafactory",
        "(Ljava/lang/invoke/MethodHandles$Lookup;Ljava/lang/String;Ljava/lang/invoke/MethodType;Ljava/lang/invoke/MethodType;Ljava/lang/invoke/MethodHandle;Ljava/lang/invoke/MethodType;)Ljava/lang/invoke/CallSite;",
    );
    let bsm = b.method_handle(6, metafactory);
    let void_type = b.method_type("()V");
    let targets: Vec<u16> = (0..2)
        .map(|k| {
            let r = b.methodref(name, &format!("lambda$run${k}"), "()V");
            b.method_handle(6, r)
        })
        .collect();
    let sites: Vec<u16> =
        targets.iter().map(|&t| b.invoke_dynamic(bsm, vec![void_type, t, void_type], "run", "()Ljava/lang/Runnable;")).collect();
    let mut code = Vec::new();
    for &site in &sites {
        code.push(0xba);
        code.extend_from_slice(&site.to_be_bytes());
        code.extend_from_slice(&[0, 0, 0x57]);
    }
    code.push(0xb1);
    let parts = simple(code, 1, 1, shape.line_base + 30);
    let code = parts.into_code(&mut b);
    b.add_method(0x0001, "run", "()V", Some(code));

    let out = b.fieldref("java/lang/System", "out", "Ljava/io/PrintStream;");
    let println = b.methodref("java/io/PrintStream", "println", "(Ljava/lang/String;)V");
    for k in 0..2usize {
        let mut a = CodeAsm::new();
        for rep in 0..=k {
            let s = b.string(&shape.strings[(k + rep + 2) % shape.strings.len()]);
            a.op_u16(0xb2, out).ldc(s).op_u16(0xb6, println);
        }
        a.op(0xb1);
        let parts = simple(a.finish().0, 2, 0, shape.line_base + 31 + k as u16);
        let code = parts.into_code(&mut b);
        b.add_method(0x100a, &format!("lambda$run${k}"), "()V", Some(code));
    }

    let mut inner: Vec<_> = shape
        .inner
        .iter()
        .map(|(full, simple_name, flags)| {
            let outer = full.rsplit_once('$').map(|(o, _)| o.to_string());
            b.inner_class(full, outer.as_deref(), Some(simple_name), *flags)
        })
        .collect();
    inner.push(b.inner_class("java/lang/invoke/MethodHandles$Lookup", Some("java/lang/invoke/MethodHandles"), Some("Lookup"), 0x0019));
    let attr = b.attribute("InnerClasses", AttrBody::InnerClasses(inner));
    b.add_class_attribute(attr);
    let file = shape.class_name.rsplit('/').next().unwrap_or("Widget").to_string() + ".java";
    let sf = b.utf8(&file);
    let attr = b.attribute("SourceFile", AttrBody::SourceFile(sf));
    b.add_class_attribute(attr);

    let mut model = b.build();
    if variant.swap_lambdas {
        swap_lambdas(&mut model);
    }
    model
}

/// Renames the two lambdas into each other while keeping every call site
/// bound to the same body.
fn swap_lambdas(model: &mut ClassModel) {
    let idx: Vec<usize> = model
        .methods
        .iter()
        .enumerate()
        .filter(|(_, m)| model.constant_pool.utf8_lossy(m.name_index).starts_with("lambda$"))
        .map(|(i, _)| i)
        .collect();
    if let [x, y] = idx[..] {
        let nx = model.methods[x].name_index;
        model.methods[x].name_index = model.methods[y].name_index;
        model.methods[y].name_index = nx;
    }
    for a in &mut model.attributes {
        if let AttrBody::BootstrapMethods(v) = &mut a.body {
            if v.len() == 2 {
                let t = v[0].arguments[1];
                v[0].arguments[1] = v[1].arguments[1];
                v[1].arguments[1] = t;
            }
        }
    }
}

/// A small class in the style of a plain compiled source file: constructor
/// plus one method returning a constant string.
pub fn plain_class(name: &str, method: &str, value: &str, line: u16) -> ClassModel {
    let mut b = ClassBuilder::new(name, OBJECT);
    let init = b.methodref(OBJECT, "<init>", "()V");
    let mut a = CodeAsm::new();
    a.local(0x19, 0).op_u16(0xb7, init).op(0xb1);
    let parts = simple(a.finish().0, 1, 1, line);
    let code = parts.into_code(&mut b);
    b.add_method(0x0001, "<init>", "()V", Some(code));
    let s = b.string(value);
    let mut a = CodeAsm::new();
    a.ldc(s).op(0xb0);
    let parts = simple(a.finish().0, 1, 1, line + 2);
    let code = parts.into_code(&mut b);
    b.add_method(0x0001, method, "()Ljava/lang/String;", Some(code));
    let file = name.rsplit('/').next().unwrap_or(name).to_string() + ".java";
    let sf = b.utf8(&file);
    let attr = b.attribute("SourceFile", AttrBody::SourceFile(sf));
    b.add_class_attribute(attr);
    b.build()
}

/// Frame sanity helper used by tests: number of frames in `compute`.
pub fn compute_frames(model: &ClassModel) -> Vec<StackMapFrame> {
    model
        .find_method("compute", "(IJ)J")
        .and_then(|m| {
            m.attributes.iter().find_map(|a| match &a.body {
                AttrBody::Code(c) => c.attributes.iter().find_map(|x| match &x.body {
                    AttrBody::StackMapTable(f) => Some(f.clone()),
                    _ => None,
                }),
                _ => None,
            })
        })
        .unwrap_or_default()
}

impl WidgetShape {
    /// A fixed shape for tests and examples.
    pub fn sample() -> Self {
        WidgetShape {
            class_name: "com/example/Widget".into(),
            accessors: vec!["withResourceRequirementObject".into(), "withAPIServiceObject".into(), "describe".into()],
            strings: ["widget", "alpha", "beta", "gamma", "delta"].iter().map(|s| s.to_string()).collect(),
            increment: 7,
            line_base: 28,
            inner: vec![
                ("com/example/Widget$Builder".into(), "Builder".into(), 0x0009),
                ("com/example/Widget$Mode".into(), "Mode".into(), 0x4019),
            ],
        }
    }
}

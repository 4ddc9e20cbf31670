//! Instruction decoding for `Code` attributes.

use super::{malformed, ClassError};
use crate::bytes::Reader;

pub const LDC: u8 = 0x12;
pub const LDC_W: u8 = 0x13;
pub const LDC2_W: u8 = 0x14;
pub const WIDE: u8 = 0xc4;
pub const IINC: u8 = 0x84;
pub const RET: u8 = 0xa9;
pub const TABLESWITCH: u8 = 0xaa;
pub const LOOKUPSWITCH: u8 = 0xab;
pub const INVOKEINTERFACE: u8 = 0xb9;
pub const INVOKEDYNAMIC: u8 = 0xba;
pub const MULTIANEWARRAY: u8 = 0xc5;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    None,
    /// Local variable access. `family` is the generic opcode (`iload`,
    /// `astore`, `ret`, ...), `implicit` marks the `_n` short forms.
    Local {
        family: u8,
        slot: u16,
        wide: bool,
        implicit: bool,
    },
    Iinc {
        slot: u16,
        delta: i16,
        wide: bool,
    },
    /// Constant pool reference. `narrow` is the one-byte `ldc` operand.
    Cp {
        index: u16,
        narrow: bool,
    },
    InvokeInterface {
        index: u16,
        count: u8,
        zero: u8,
    },
    InvokeDynamic {
        index: u16,
        zero: u16,
    },
    MultiANewArray {
        index: u16,
        dims: u8,
    },
    /// Relative branch offset.
    Branch(i32),
    Byte(i8),
    Short(i16),
    NewArray(u8),
    TableSwitch {
        padding: Vec<u8>,
        default: i32,
        low: i32,
        high: i32,
        offsets: Vec<i32>,
    },
    LookupSwitch {
        padding: Vec<u8>,
        default: i32,
        pairs: Vec<(i32, i32)>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instruction {
    pub offset: u32,
    pub opcode: u8,
    pub len: u32,
    pub operand: Operand,
}

impl Instruction {
    /// Width in slots of the local accessed, 2 for long/double families.
    pub fn local_width(&self) -> u16 {
        match self.operand {
            Operand::Local { family: 0x16 | 0x18 | 0x37 | 0x39, .. } => 2,
            _ => 1,
        }
    }

    /// Absolute branch targets, in operand order.
    pub fn targets(&self) -> Vec<i64> {
        let base = self.offset as i64;
        match &self.operand {
            Operand::Branch(rel) => vec![base + *rel as i64],
            Operand::TableSwitch { default, offsets, .. } => {
                std::iter::once(*default).chain(offsets.iter().copied()).map(|r| base + r as i64).collect()
            }
            Operand::LookupSwitch { default, pairs, .. } => {
                std::iter::once(*default).chain(pairs.iter().map(|p| p.1)).map(|r| base + r as i64).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Generic family opcode and slot for the implicit `xload_n`/`xstore_n` forms.
fn implicit_local(op: u8) -> Option<(u8, u16)> {
    match op {
        0x1a..=0x2d => Some((0x15 + (op - 0x1a) / 4, ((op - 0x1a) % 4) as u16)),
        0x3b..=0x4e => Some((0x36 + (op - 0x3b) / 4, ((op - 0x3b) % 4) as u16)),
        _ => None,
    }
}

fn is_local_family(op: u8) -> bool {
    matches!(op, 0x15..=0x19 | 0x36..=0x3a | RET)
}

fn has_u16_cp(op: u8) -> bool {
    matches!(op, LDC_W | LDC2_W | 0xb2..=0xb8 | 0xbb | 0xbd | 0xc0 | 0xc1)
}

fn is_branch16(op: u8) -> bool {
    matches!(op, 0x99..=0xa8 | 0xc6 | 0xc7)
}

/// Decodes the whole instruction stream; fails on unknown opcodes or truncation.
pub fn decode(code: &[u8]) -> Result<Vec<Instruction>, ClassError> {
    let mut r = Reader::new(code);
    let mut out = Vec::new();
    while !r.is_empty() {
        let offset = r.pos() as u32;
        let op = r.u8()?;
        let operand = match op {
            _ if implicit_local(op).is_some() => {
                let (family, slot) = implicit_local(op).unwrap();
                Operand::Local { family, slot, wide: false, implicit: true }
            }
            _ if is_local_family(op) => Operand::Local { family: op, slot: r.u8()? as u16, wide: false, implicit: false },
            IINC => Operand::Iinc { slot: r.u8()? as u16, delta: r.u8()? as i8 as i16, wide: false },
            WIDE => {
                let inner = r.u8()?;
                if inner == IINC {
                    Operand::Iinc { slot: r.u16_be()?, delta: r.i16_be()?, wide: true }
                } else if is_local_family(inner) {
                    Operand::Local { family: inner, slot: r.u16_be()?, wide: true, implicit: false }
                } else {
                    return Err(malformed(format!("wide prefix on opcode 0x{inner:02x} at {offset}")));
                }
            }
            LDC => Operand::Cp { index: r.u8()? as u16, narrow: true },
            _ if has_u16_cp(op) => Operand::Cp { index: r.u16_be()?, narrow: false },
            INVOKEINTERFACE => Operand::InvokeInterface { index: r.u16_be()?, count: r.u8()?, zero: r.u8()? },
            INVOKEDYNAMIC => Operand::InvokeDynamic { index: r.u16_be()?, zero: r.u16_be()? },
            MULTIANEWARRAY => Operand::MultiANewArray { index: r.u16_be()?, dims: r.u8()? },
            _ if is_branch16(op) => Operand::Branch(r.i16_be()? as i32),
            0xc8 | 0xc9 => Operand::Branch(r.i32_be()?),
            0x10 => Operand::Byte(r.u8()? as i8),
            0x11 => Operand::Short(r.i16_be()?),
            0xbc => Operand::NewArray(r.u8()?),
            TABLESWITCH => {
                let pad = (4 - (r.pos() % 4)) % 4;
                let padding = r.take(pad)?.to_vec();
                let default = r.i32_be()?;
                let low = r.i32_be()?;
                let high = r.i32_be()?;
                if high < low || (high as i64 - low as i64) > 65535 {
                    return Err(malformed(format!("tableswitch bounds {low}..{high} at {offset}")));
                }
                let offsets = (low..=high).map(|_| r.i32_be()).collect::<Result<Vec<_>, _>>()?;
                Operand::TableSwitch { padding, default, low, high, offsets }
            }
            LOOKUPSWITCH => {
                let pad = (4 - (r.pos() % 4)) % 4;
                let padding = r.take(pad)?.to_vec();
                let default = r.i32_be()?;
                let n = r.i32_be()?;
                if !(0..=65535).contains(&n) {
                    return Err(malformed(format!("lookupswitch pair count {n} at {offset}")));
                }
                let pairs = (0..n).map(|_| Ok((r.i32_be()?, r.i32_be()?))).collect::<Result<Vec<_>, ClassError>>()?;
                Operand::LookupSwitch { padding, default, pairs }
            }
            0x00..=0x0f | 0x2e..=0x35 | 0x4f..=0x83 | 0x85..=0x98 | 0xac..=0xb1 | 0xbe | 0xbf | 0xc2 | 0xc3 => Operand::None,
            _ => return Err(malformed(format!("unknown opcode 0x{op:02x} at {offset}"))),
        };
        out.push(Instruction { offset, opcode: op, len: r.pos() as u32 - offset, operand });
    }
    Ok(out)
}

/// Visits every constant-pool operand in `code` with its opcode, letting `f` replace it.
/// Returns an error when `f` fails or a replacement does not fit a narrow `ldc`.
pub(crate) fn remap_cp_operands(code: &mut [u8], f: &mut dyn FnMut(u16, u8) -> Result<u16, ClassError>) -> Result<(), ClassError> {
    let insns = decode(code)?;
    for insn in insns {
        let at = insn.offset as usize + 1;
        match insn.operand {
            Operand::Cp { index, narrow: true } => {
                let new = f(index, insn.opcode)?;
                if new > 255 {
                    return Err(malformed(format!("ldc operand #{new} exceeds one byte at {}", insn.offset)));
                }
                code[at] = new as u8;
            }
            Operand::Cp { index, narrow: false }
            | Operand::InvokeInterface { index, .. }
            | Operand::InvokeDynamic { index, .. }
            | Operand::MultiANewArray { index, .. } => {
                let new = f(index, insn.opcode)?;
                code[at..at + 2].copy_from_slice(&new.to_be_bytes());
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_short_and_wide_locals() {
        // aload_0, astore 15, wide aload 300, iinc 2 -1, lload_1, return
        let code = [0x2a, 0x3a, 15, 0xc4, 0x19, 0x01, 0x2c, 0x84, 2, 0xff, 0x1f, 0xb1];
        let insns = decode(&code).unwrap();
        assert_eq!(insns.len(), 6);
        assert_eq!(insns[0].operand, Operand::Local { family: 0x19, slot: 0, wide: false, implicit: true });
        assert_eq!(insns[1].operand, Operand::Local { family: 0x3a, slot: 15, wide: false, implicit: false });
        assert_eq!(insns[2].operand, Operand::Local { family: 0x19, slot: 300, wide: true, implicit: false });
        assert_eq!(insns[3].operand, Operand::Iinc { slot: 2, delta: -1, wide: false });
        assert_eq!(insns[4].operand, Operand::Local { family: 0x16, slot: 1, wide: false, implicit: true });
        assert_eq!(insns[4].local_width(), 2);
    }

    #[test]
    fn decodes_switch_padding() {
        // nop, tableswitch (pad 2) default 20 low 0 high 1 [10, 12]
        let mut code = vec![0x00, TABLESWITCH, 0, 0];
        for v in [20i32, 0, 1, 10, 12] {
            code.extend_from_slice(&v.to_be_bytes());
        }
        let insns = decode(&code).unwrap();
        assert_eq!(insns[1].len, 23);
        assert_eq!(insns[1].targets(), vec![21, 11, 13]);
    }

    #[test]
    fn rejects_unknown_opcode_and_truncation() {
        assert!(decode(&[0xcb]).is_err());
        assert!(decode(&[0xb6, 0x00]).is_err());
    }

    #[test]
    fn narrow_ldc_overflow_is_reported() {
        let mut code = [LDC, 3, 0xb1];
        let err = remap_cp_operands(&mut code, &mut |_, _| Ok(300)).unwrap_err();
        assert!(err.to_string().contains("exceeds one byte"));
        let mut code = [LDC, 3, 0xb6, 0, 9];
        remap_cp_operands(&mut code, &mut |i, _| Ok(i + 1)).unwrap();
        assert_eq!(code, [LDC, 4, 0xb6, 0, 10]);
    }
}

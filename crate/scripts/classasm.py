#!/usr/bin/env python3
"""Assembles the running-example classes Bar and Baz byte by byte.

No JDK is available where this repository is built, so this hand assembler
stands in for javac. It lays out the constant pool the way javac 8 does for

    public class Bar {
        private String name = "bar";
        public String getName() { return name; }
    }

and writes Bar.class, Baz.class and classes.json (what a reader should see)
under crates/core/tests/data/classes. It shares no code with verjar.
Run from the repository root:  python3 scripts/classasm.py
"""
import json
import os
import struct

OUT = os.path.join("crates", "core", "tests", "data", "classes")

UTF8, CLASS, STRING, FIELDREF, METHODREF, NAME_AND_TYPE = 1, 7, 8, 9, 10, 12


class Pool:
    def __init__(self, entries):
        self.entries = entries  # (tag, payload bytes), 1-based by position

    def encode(self):
        out = struct.pack(">H", len(self.entries) + 1)
        for tag, payload in self.entries:
            out += bytes([tag]) + payload
        return out


def javac_order_pool(name, value):
    """Reproduces javac's allocation order: refs first, their parts after."""
    entries = []

    def placeholder():
        entries.append(None)
        return len(entries)

    obj_init = placeholder()
    obj_class = placeholder()
    obj_nat = placeholder()
    obj_name = placeholder()
    init_name = placeholder()
    void_desc = placeholder()
    str_const = placeholder()
    str_utf = placeholder()
    field_ref = placeholder()
    this_class = placeholder()
    field_nat = placeholder()
    this_name = placeholder()
    field_name = placeholder()
    field_desc = placeholder()
    code = placeholder()
    lnt = placeholder()
    getter = placeholder()
    getter_desc = placeholder()
    source_file = placeholder()
    source_name = placeholder()

    def u(s):
        b = s.encode("utf-8")
        return (UTF8, struct.pack(">H", len(b)) + b)

    entries[obj_init - 1] = (METHODREF, struct.pack(">HH", obj_class, obj_nat))
    entries[obj_class - 1] = (CLASS, struct.pack(">H", obj_name))
    entries[obj_nat - 1] = (NAME_AND_TYPE, struct.pack(">HH", init_name, void_desc))
    entries[obj_name - 1] = u("java/lang/Object")
    entries[init_name - 1] = u("<init>")
    entries[void_desc - 1] = u("()V")
    entries[str_const - 1] = (STRING, struct.pack(">H", str_utf))
    entries[str_utf - 1] = u(value)
    entries[field_ref - 1] = (FIELDREF, struct.pack(">HH", this_class, field_nat))
    entries[this_class - 1] = (CLASS, struct.pack(">H", this_name))
    entries[field_nat - 1] = (NAME_AND_TYPE, struct.pack(">HH", field_name, field_desc))
    entries[this_name - 1] = u(name)
    entries[field_name - 1] = u("name")
    entries[field_desc - 1] = u("Ljava/lang/String;")
    entries[code - 1] = u("Code")
    entries[lnt - 1] = u("LineNumberTable")
    entries[getter - 1] = u("getName")
    entries[getter_desc - 1] = u("()Ljava/lang/String;")
    entries[source_file - 1] = u("SourceFile")
    entries[source_name - 1] = u(name + ".java")
    return Pool(entries), dict(
        obj_init=obj_init, obj_class=obj_class, str_const=str_const, field_ref=field_ref, this_class=this_class,
        init_name=init_name, void_desc=void_desc, field_name=field_name, field_desc=field_desc, code=code, lnt=lnt,
        getter=getter, getter_desc=getter_desc, source_file=source_file, source_name=source_name,
    )


def code_attr(ix, max_stack, max_locals, code, lines):
    lnt = struct.pack(">H", len(lines)) + b"".join(struct.pack(">HH", pc, ln) for pc, ln in lines)
    lnt_attr = struct.pack(">HI", ix["lnt"], len(lnt)) + lnt
    body = struct.pack(">HHI", max_stack, max_locals, len(code)) + code + struct.pack(">H", 0)
    body += struct.pack(">H", 1) + lnt_attr
    return struct.pack(">HI", ix["code"], len(body)) + body


def assemble(name, value):
    pool, ix = javac_order_pool(name, value)
    init_code = bytes([0x2A, 0xB7]) + struct.pack(">H", ix["obj_init"])
    init_code += bytes([0x2A, 0x12, ix["str_const"], 0xB5]) + struct.pack(">H", ix["field_ref"]) + bytes([0xB1])
    get_code = bytes([0x2A, 0xB4]) + struct.pack(">H", ix["field_ref"]) + bytes([0xB0])

    out = struct.pack(">IHH", 0xCAFEBABE, 0, 52)
    out += pool.encode()
    out += struct.pack(">HHH", 0x0021, ix["this_class"], ix["obj_class"])
    out += struct.pack(">H", 0)  # interfaces
    out += struct.pack(">H", 1) + struct.pack(">HHHH", 0x0002, ix["field_name"], ix["field_desc"], 0)
    out += struct.pack(">H", 2)
    out += struct.pack(">HHHH", 0x0001, ix["init_name"], ix["void_desc"], 1)
    out += code_attr(ix, 2, 1, init_code, [(0, 1), (4, 2)])
    out += struct.pack(">HHHH", 0x0001, ix["getter"], ix["getter_desc"], 1)
    out += code_attr(ix, 1, 1, get_code, [(0, 3)])
    out += struct.pack(">H", 1) + struct.pack(">HIH", ix["source_file"], 2, ix["source_name"])
    expected = {
        "this_class": name,
        "super_class": "java/lang/Object",
        "major_version": 52,
        "constant_pool_count": len(pool.entries) + 1,
        "fields": [["name", "Ljava/lang/String;"]],
        "methods": [["<init>", "()V"], ["getName", "()Ljava/lang/String;"]],
        "code_hex": [init_code.hex(), get_code.hex()],
        "line_numbers": [[[0, 1], [4, 2]], [[0, 3]]],
        "source_file": name + ".java",
        "size": len(out),
    }
    return out, expected


def main():
    os.makedirs(OUT, exist_ok=True)
    described = {}
    for name, value in [("Bar", "bar"), ("Baz", "baz")]:
        data, expected = assemble(name, value)
        with open(os.path.join(OUT, name + ".class"), "wb") as f:
            f.write(data)
        described[name + ".class"] = expected
    with open(os.path.join(OUT, "classes.json"), "w") as f:
        json.dump(described, f, indent=2, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()

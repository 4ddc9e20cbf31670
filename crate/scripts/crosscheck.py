#!/usr/bin/env python3
"""Freezes an independent reading of verjar's fixture archives.

Builds the verjar binary, has it write fixture pairs for every pattern, then
reads every archive back with Python's zipfile (which also checks each CRC)
and dumps every class file with the small reader below. The result goes to
crates/core/tests/data/crosscheck.json, which the Rust crosscheck test
compares against verjar's own reader and class parser. The ZIP corpus under
tests/data/zips is listed the same way.

Run from the repository root:  python3 scripts/crosscheck.py
"""
import hashlib
import json
import os
import struct
import subprocess
import sys
import tempfile
import zipfile

DATA = os.path.join("crates", "core", "tests", "data")
SEEDS = 2

WIDE = {5, 6}
FIXED = {3: 4, 4: 4, 5: 8, 6: 8, 7: 2, 8: 2, 9: 4, 10: 4, 11: 4, 12: 4, 15: 3, 16: 2, 17: 4, 18: 4, 19: 2, 20: 2}


class Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        out = self.data[self.pos:self.pos + n]
        if len(out) != n:
            raise ValueError("truncated class file")
        self.pos += n
        return out

    def u1(self):
        return self.take(1)[0]

    def u2(self):
        return struct.unpack(">H", self.take(2))[0]

    def u4(self):
        return struct.unpack(">I", self.take(4))[0]


def dump_class(data):
    r = Reader(data)
    if r.u4() != 0xCAFEBABE:
        raise ValueError("bad magic")
    minor, major = r.u2(), r.u2()
    count = r.u2()
    pool = {}
    tags = []
    i = 1
    while i < count:
        tag = r.u1()
        tags.append(tag)
        if tag == 1:
            pool[i] = r.take(r.u2()).decode("utf-8", "surrogatepass")
        elif tag in FIXED:
            pool[i] = r.take(FIXED[tag])
        else:
            raise ValueError("unknown constant tag %d" % tag)
        i += 2 if tag in WIDE else 1

    def utf8(ix):
        return pool[ix]

    def class_name(ix):
        return utf8(struct.unpack(">H", pool[ix])[0]) if ix else None

    def attributes():
        out = []
        for _ in range(r.u2()):
            name = utf8(r.u2())
            body = r.take(r.u4())
            item = {"name": name, "length": len(body)}
            if name == "Code":
                max_stack, max_locals, code_len = struct.unpack(">HHI", body[:8])
                item.update(max_stack=max_stack, max_locals=max_locals, code_length=code_len)
            out.append(item)
        return out

    access = r.u2()
    this_class, super_class = class_name(r.u2()), class_name(r.u2())
    interfaces = [class_name(r.u2()) for _ in range(r.u2())]

    def members():
        out = []
        for _ in range(r.u2()):
            flags, name, desc = r.u2(), r.u2(), r.u2()
            out.append({"access": flags, "name": utf8(name), "descriptor": utf8(desc), "attributes": attributes()})
        return out

    fields = members()
    methods = members()
    attrs = attributes()
    if r.pos != len(data):
        raise ValueError("trailing bytes after class")
    return {
        "version": [major, minor],
        "constant_pool_count": count,
        "constant_tags": tags,
        "access": access,
        "this_class": this_class,
        "super_class": super_class,
        "interfaces": interfaces,
        "fields": fields,
        "methods": methods,
        "attributes": attrs,
    }


def list_archive(path, dump_classes=True):
    with open(path, "rb") as f:
        raw = f.read()
    with zipfile.ZipFile(path) as zf:
        bad = zf.testzip()
        if bad is not None:
            raise ValueError("%s: CRC mismatch in %s" % (path, bad))
        entries, classes = [], {}
        for info in zf.infolist():
            entries.append({
                "name": info.filename,
                "crc32": info.CRC,
                "size": info.file_size,
                "compressed_size": info.compress_size,
                "method": info.compress_type,
                "date_time": list(info.date_time),
            })
            if dump_classes and info.filename.endswith(".class"):
                classes[info.filename] = dump_class(zf.read(info))
        comment = zf.comment.decode("latin-1")
    return {"sha256": hashlib.sha256(raw).hexdigest(), "comment": comment, "entries": entries, "classes": classes}


def main():
    subprocess.run(["cargo", "build", "--quiet", "-p", "verjar-cli"], check=True)
    exe = os.path.join("target", "debug", "verjar")
    fixtures = {}
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([exe, "fixtures", "--out", tmp, "--count", str(SEEDS)], check=True)
        subprocess.run([exe, "fixtures", "--out", os.path.join(tmp, "example"), "--running-example"], check=True)
        for root, _, files in os.walk(tmp):
            for name in files:
                if name.endswith(".jar"):
                    path = os.path.join(root, name)
                    fixtures[os.path.relpath(path, tmp).replace(os.sep, "/")] = list_archive(path)
    corpus = {}
    zips = os.path.join(DATA, "zips")
    for name in sorted(os.listdir(zips)):
        # Corpus class entries are placeholder bodies, not real classes.
        corpus[name] = list_archive(os.path.join(zips, name), dump_classes=False)
    with open(os.path.join(DATA, "crosscheck.json"), "w") as f:
        json.dump({"seeds": SEEDS, "fixtures": dict(sorted(fixtures.items())), "corpus": corpus}, f, separators=(",", ":"), sort_keys=True)
        f.write("\n")
    print("listed %d fixture archives and %d corpus archives" % (len(fixtures), len(corpus)), file=sys.stderr)


if __name__ == "__main__":
    main()

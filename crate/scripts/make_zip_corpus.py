#!/usr/bin/env python3
"""Writes the preservation round-trip corpus with Python's zipfile module.

The archives are produced by an archiver that shares no code with verjar, so
reading and re-serializing them is an independent check of the ZIP codec.
Run from the repository root:  python3 scripts/make_zip_corpus.py
"""
import io
import os
import random
import struct
import zipfile

OUT = os.path.join("crates", "core", "tests", "data", "zips")


class Unseekable(io.RawIOBase):
    """Forces zipfile to emit data descriptors (general-purpose flag bit 3)."""

    def __init__(self):
        self.buf = bytearray()

    def writable(self):
        return True

    def write(self, b):
        self.buf += b
        return len(b)


def body(rng, n):
    words = [b"alpha", b"beta", b"gamma", b"delta", b"\n", b"=", b"class", b"java"]
    return b" ".join(rng.choice(words) for _ in range(n))


def make(idx, rng):
    variant = idx % 8
    compression = [zipfile.ZIP_STORED, zipfile.ZIP_DEFLATED][idx % 2]
    level = [None, 1, 6, 9][idx % 4] if compression == zipfile.ZIP_DEFLATED else None
    sink = Unseekable() if variant == 3 else io.BytesIO()
    with zipfile.ZipFile(sink, "w", compression=compression, compresslevel=level) as zf:
        if variant == 5:
            zf.comment = b"built by corpus script %d" % idx
        entries = [
            "META-INF/",
            "META-INF/MANIFEST.MF",
            "com/example/Foo%d.class" % idx,
            "com/example/Bar.class",
            "META-INF/maven/com.example/foo/pom.properties",
        ]
        if variant == 6:
            entries.append("res/ünïcode-%d.txt" % idx)
        rng.shuffle(entries[2:])
        for name in entries:
            info = zipfile.ZipInfo(name, date_time=(1990 + idx % 30, 1 + idx % 12, 1 + idx % 28, idx % 24, idx % 60, (2 * idx) % 60))
            info.compress_type = zipfile.ZIP_STORED if name.endswith("/") else compression
            info.external_attr = (0o40755 << 16) | 0x10 if name.endswith("/") else (0o100644 << 16)
            if variant == 4:
                # Extended-timestamp extra field (0x5455).
                info.extra = struct.pack("<HHBI", 0x5455, 5, 1, 1_600_000_000 + idx)
            if variant == 7:
                info.comment = b"entry comment"
            if name.endswith("/"):
                payload = b""
            elif name.endswith(".class"):
                payload = b"\xca\xfe\xba\xbe\x00\x00\x00\x34" + body(rng, 20 + idx)
            elif name.endswith(".MF"):
                payload = b"Manifest-Version: 1.0\r\nCreated-By: corpus\r\n\r\n"
            else:
                payload = b"#Generated by Maven\n#Sun Sep 18 22:43:23 EDT 2021\nversion=1.%d\n" % idx
            zf.writestr(info, payload)
    return bytes(sink.buf) if isinstance(sink, Unseekable) else sink.getvalue()


def main():
    os.makedirs(OUT, exist_ok=True)
    rng = random.Random(20211)
    for idx in range(24):
        with open(os.path.join(OUT, "corpus-%02d.jar" % idx), "wb") as f:
            f.write(make(idx, rng))
    # Empty archive: end-of-central-directory record only.
    with zipfile.ZipFile(os.path.join(OUT, "empty.zip"), "w"):
        pass


if __name__ == "__main__":
    main()

"""Write golden and corrupted binary AndroidManifest fixtures.

The encoder follows the platform ResourceTypes.h layout directly and shares
no code with the Rust parser or the Rust test writer.

    python3 axml_fixtures.py    # writes ../axml/*.axml and ../axml/expected.json
"""
import json
import os
import struct

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "axml")

ANDROID = "http://schemas.android.com/apk/res/android"
NONE = 0xFFFFFFFF
RES_IDS = {
    "name": 0x01010003,
    "label": 0x01010001,
    "minSdkVersion": 0x0101020C,
    "targetSdkVersion": 0x01010270,
    "targetActivity": 0x01010202,
    "exported": 0x01010010,
}
T_STRING, T_INT, T_BOOL = 0x03, 0x10, 0x12


def chunk(kind, header, body):
    return struct.pack("<HHI", kind, 8 + len(header), 8 + len(header) + len(body)) + header + body


def len8(n):
    return bytes([0x80 | (n >> 8), n & 0xFF]) if n > 0x7F else bytes([n])


def len16(n):
    return struct.pack("<HH", 0x8000 | (n >> 16), n & 0xFFFF) if n > 0x7FFF else struct.pack("<H", n)


def pool_chunk(strings, utf8):
    data = b""
    offsets = []
    for s in strings:
        offsets.append(len(data))
        if utf8:
            raw = s.encode("utf-8")
            data += len8(len(s.encode("utf-16-le")) // 2) + len8(len(raw)) + raw + b"\0"
        else:
            raw = s.encode("utf-16-le")
            data += len16(len(raw) // 2) + raw + b"\0\0"
    data += b"\0" * (-len(data) % 4)
    starts = 28 + 4 * len(strings)
    header = struct.pack("<IIIII", len(strings), 0, 0x100 if utf8 else 0, starts, 0)
    return chunk(0x0001, header, b"".join(struct.pack("<I", o) for o in offsets) + data)


class Doc:
    def __init__(self, utf8=False, prefix="android", anonymous=False):
        self.utf8, self.prefix, self.anonymous = utf8, prefix, anonymous
        self.events = []

    def start(self, tag, attrs=()):
        self.events.append(("start", tag, list(attrs)))
        return self

    def end(self, tag):
        self.events.append(("end", tag, None))
        return self

    def leaf(self, tag, attrs=()):
        return self.start(tag, attrs).end(tag)

    def encode(self):
        # Attribute names with resource ids come first so the resource map
        # lines up with pool indices.
        mapped = []
        for kind, _, attrs in self.events:
            for ns, name, _ in attrs or []:
                if ns and name in RES_IDS:
                    key = ("" if self.anonymous else name, RES_IDS[name])
                    if key not in mapped:
                        mapped.append(key)
        strings = [k[0] for k in mapped]

        def idx(s):
            if s not in strings:
                strings.append(s)
            return strings.index(s)

        def name_idx(ns, name):
            if ns and name in RES_IDS:
                return mapped.index(("" if self.anonymous else name, RES_IDS[name]))
            return idx(name)

        p, u = idx(self.prefix), idx(ANDROID)
        node = struct.pack("<II", 7, NONE)
        body = chunk(0x0100, node, struct.pack("<II", p, u))
        for kind, tag, attrs in self.events:
            if kind == "end":
                body += chunk(0x0103, node, struct.pack("<II", NONE, idx(tag)))
                continue
            ext = struct.pack("<IIHHHHHH", NONE, idx(tag), 0x14, 0x14, len(attrs), 0, 0, 0)
            for ns, name, value in attrs:
                n = name_idx(ns, name)
                if isinstance(value, bool):
                    raw, t, d = NONE, T_BOOL, NONE if value else 0
                elif isinstance(value, int):
                    raw, t, d = NONE, T_INT, value & 0xFFFFFFFF
                else:
                    raw = d = idx(value)
                    t = T_STRING
                ext += struct.pack("<IIIHBBI", u if ns else NONE, n, raw, 8, 0, t, d)
            body += chunk(0x0102, node, ext)
        body += chunk(0x0101, node, struct.pack("<II", p, u))
        resmap = chunk(0x0180, b"", b"".join(struct.pack("<I", i) for _, i in mapped))
        return chunk(0x0003, b"", pool_chunk(strings, self.utf8) + resmap + body)


def A(name, value):
    return (True, name, value)


def launcher(doc, tag, attrs):
    doc.start(tag, attrs).start("intent-filter")
    doc.leaf("action", [A("name", "android.intent.action.MAIN")])
    doc.leaf("category", [A("name", "android.intent.category.LAUNCHER")])
    return doc.end("intent-filter").end(tag)


def perms(doc, names, tag="uses-permission"):
    for n in names:
        doc.leaf(tag, [A("name", n)])


def golden():
    out = {}

    d = Doc(utf8=False)
    d.start("manifest", [(False, "package", "com.fortune.lottery"), A("versionCode", 12)])
    d.leaf("uses-sdk", [A("minSdkVersion", 19), A("targetSdkVersion", 28)])
    ps = ["android.permission.INTERNET", "android.permission.READ_PHONE_STATE", "android.permission.CAMERA"]
    perms(d, ps)
    d.start("application", [A("label", "Lucky")])
    d.leaf("activity", [A("name", ".SplashActivity")])
    launcher(d, "activity", [A("name", ".MainActivity"), A("exported", True)])
    d.end("application").end("manifest")
    out["golden_utf16"] = (d, "com.fortune.lottery", ps, "com.fortune.lottery.MainActivity")

    d = Doc(utf8=True)
    d.start("manifest", [(False, "package", "io.dcloud.H5A1B2C3")])
    ps = [
        "android.permission.INTERNET",
        "android.permission.ACCESS_NETWORK_STATE",
        "android.permission.READ_CONTACTS",
        "android.permission.ACCESS_FINE_LOCATION",
        "android.permission.RECORD_AUDIO",
    ]
    perms(d, ps)
    d.start("application", [A("label", "彩票大厅")])
    launcher(d, "activity", [A("name", "io.dcloud.PandoraEntry")])
    d.leaf("activity", [A("name", "io.dcloud.PandoraEntryActivity")])
    d.end("application").end("manifest")
    out["golden_utf8_cjk"] = (d, "io.dcloud.H5A1B2C3", ps, "io.dcloud.PandoraEntry")

    d = Doc(utf8=False, prefix="a")
    d.start("manifest", [(False, "package", "net.quick.loan")])
    ps = ["android.permission.READ_SMS", "android.permission.INTERNET"]
    perms(d, ps)
    d.start("application")
    d.leaf("activity", [A("name", "net.quick.loan.ui.Home")])
    launcher(d, "activity-alias", [A("name", ".Launcher"), A("targetActivity", "net.quick.loan.ui.Home")])
    d.end("application").end("manifest")
    out["golden_alias"] = (d, "net.quick.loan", ps, "net.quick.loan.ui.Home")

    d = Doc(utf8=True, anonymous=True)
    d.start("manifest", [(False, "package", "com.vip.chat")])
    d.leaf("uses-sdk", [A("minSdkVersion", 21)])
    perms(d, ["android.permission.INTERNET"])
    perms(d, ["android.permission.READ_CALL_LOG"], tag="uses-permission-sdk-23")
    d.start("application")
    launcher(d, "activity", [A("name", "Entry")])
    d.end("application").end("manifest")
    ps = ["android.permission.INTERNET", "android.permission.READ_CALL_LOG"]
    out["golden_anonymous"] = (d, "com.vip.chat", ps, "com.vip.chat.Entry")

    d = Doc(utf8=False)
    pkg = "com." + "verylongsegment" * 10 + ".app"
    d.start("manifest", [(False, "package", pkg)])
    d.start("application", [A("label", "x" * 300)])
    d.leaf("activity", [A("name", ".OnlyActivity")])
    d.end("application").end("manifest")
    out["golden_no_launcher"] = (d, pkg, [], None)
    return out


def main():
    os.makedirs(OUT, exist_ok=True)
    expected = {}
    blobs = {}
    for name, (doc, pkg, ps, main_activity) in golden().items():
        blob = doc.encode()
        blobs[name] = blob
        with open(os.path.join(OUT, name + ".axml"), "wb") as f:
            f.write(blob)
        expected[name] = {"package": pkg, "permissions": sorted(ps), "main_activity": main_activity}

    def patch(b, off, fmt, v):
        b = bytearray(b)
        struct.pack_into(fmt, b, off, v)
        return bytes(b)

    first_elem = lambda b: b.index(struct.pack("<HH", 0x0102, 16))
    broken = {
        "broken_truncated_half": blobs["golden_utf16"][: len(blobs["golden_utf16"]) // 2],
        "broken_bad_magic": patch(blobs["golden_utf8_cjk"], 0, "<H", 0x0000),
        "broken_name_out_of_range": patch(
            blobs["golden_alias"], first_elem(blobs["golden_alias"]) + 20, "<I", 0xFFFF
        ),
        "broken_truncated_tail": blobs["golden_anonymous"][:-3],
        "broken_pool_overrun": patch(blobs["golden_no_launcher"], 12, "<I", 0x00FFFFFF),
    }
    for name, blob in broken.items():
        with open(os.path.join(OUT, name + ".axml"), "wb") as f:
            f.write(blob)
    with open(os.path.join(OUT, "expected.json"), "w") as f:
        json.dump(expected, f, indent=2, ensure_ascii=False, sort_keys=True)
        f.write("\n")


if __name__ == "__main__":
    main()

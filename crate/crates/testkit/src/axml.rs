//! Binary XML serializer, written from the platform chunk layout and kept
//! separate from the parser under test.

const RES_XML_TYPE: u16 = 0x0003;
const RES_STRING_POOL_TYPE: u16 = 0x0001;
const RES_XML_RESOURCE_MAP_TYPE: u16 = 0x0180;
const RES_XML_START_NAMESPACE_TYPE: u16 = 0x0100;
const RES_XML_END_NAMESPACE_TYPE: u16 = 0x0101;
const RES_XML_START_ELEMENT_TYPE: u16 = 0x0102;
const RES_XML_END_ELEMENT_TYPE: u16 = 0x0103;

const UTF8_FLAG: u32 = 1 << 8;
const NO_INDEX: u32 = 0xFFFF_FFFF;

pub const ANDROID_NS: &str = "http://schemas.android.com/apk/res/android";

pub const ATTR_NAME: u32 = 0x0101_0003;
pub const ATTR_MIN_SDK: u32 = 0x0101_020c;
pub const ATTR_TARGET_SDK: u32 = 0x0101_0270;
pub const ATTR_TARGET_ACTIVITY: u32 = 0x0101_0202;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Str(String),
    Int(i32),
    Bool(bool),
    Ref(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attr {
    pub android: bool,
    pub name: String,
    pub value: Value,
    /// Framework resource id recorded in the resource map.
    pub res_id: Option<u32>,
    /// Write an empty name string and rely on the resource id alone.
    pub anonymous: bool,
}

impl Attr {
    pub fn android(name: &str, value: Value) -> Self {
        let res_id = match name {
            "name" => Some(ATTR_NAME),
            "minSdkVersion" => Some(ATTR_MIN_SDK),
            "targetSdkVersion" => Some(ATTR_TARGET_SDK),
            "targetActivity" => Some(ATTR_TARGET_ACTIVITY),
            _ => None,
        };
        Self {
            android: true,
            name: name.to_string(),
            value,
            res_id,
            anonymous: false,
        }
    }

    pub fn plain(name: &str, value: Value) -> Self {
        Self {
            android: false,
            name: name.to_string(),
            value,
            res_id: None,
            anonymous: false,
        }
    }

    pub fn anonymous(mut self) -> Self {
        self.anonymous = true;
        self
    }
}

#[derive(Debug, Clone)]
enum Node {
    Start(String, Vec<Attr>),
    End(String),
}

/// Collects elements, then lays out the string pool, resource map and
/// element chunks on `finish`.
#[derive(Debug, Clone)]
pub struct AxmlWriter {
    utf8: bool,
    nodes: Vec<Node>,
}

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn chunk(kind: u16, header_size: u16, header_rest: &[u8], body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + header_rest.len() + body.len());
    push_u16(&mut out, kind);
    push_u16(&mut out, header_size);
    push_u32(&mut out, (8 + header_rest.len() + body.len()) as u32);
    out.extend_from_slice(header_rest);
    out.extend_from_slice(body);
    out
}

fn encode_len8(out: &mut Vec<u8>, n: usize) {
    if n > 0x7f {
        out.push(0x80 | ((n >> 8) as u8));
        out.push(n as u8);
    } else {
        out.push(n as u8);
    }
}

fn encode_len16(out: &mut Vec<u8>, n: usize) {
    if n > 0x7fff {
        push_u16(out, 0x8000 | ((n >> 16) as u16));
        push_u16(out, n as u16);
    } else {
        push_u16(out, n as u16);
    }
}

fn string_pool(strings: &[String], utf8: bool) -> Vec<u8> {
    let mut data = Vec::new();
    let mut offsets = Vec::new();
    for s in strings {
        offsets.push(data.len() as u32);
        if utf8 {
            encode_len8(&mut data, s.encode_utf16().count());
            encode_len8(&mut data, s.len());
            data.extend_from_slice(s.as_bytes());
            data.push(0);
        } else {
            let units: Vec<u16> = s.encode_utf16().collect();
            encode_len16(&mut data, units.len());
            for u in units {
                push_u16(&mut data, u);
            }
            push_u16(&mut data, 0);
        }
    }
    while data.len() % 4 != 0 {
        data.push(0);
    }
    let header_size = 0x1c_u16;
    let strings_start = u32::from(header_size) + 4 * strings.len() as u32;
    let mut header = Vec::new();
    push_u32(&mut header, strings.len() as u32);
    push_u32(&mut header, 0); // styles
    push_u32(&mut header, if utf8 { UTF8_FLAG } else { 0 });
    push_u32(&mut header, strings_start);
    push_u32(&mut header, 0);
    let mut body = Vec::new();
    for o in offsets {
        push_u32(&mut body, o);
    }
    body.extend_from_slice(&data);
    chunk(RES_STRING_POOL_TYPE, header_size, &header, &body)
}

struct Pool {
    strings: Vec<String>,
}

impl Pool {
    fn idx(&mut self, s: &str) -> u32 {
        match self.strings.iter().position(|x| x == s) {
            Some(i) => i as u32,
            None => {
                self.strings.push(s.to_string());
                (self.strings.len() - 1) as u32
            }
        }
    }
}

fn node_header() -> Vec<u8> {
    let mut h = Vec::new();
    push_u32(&mut h, 1); // line number
    push_u32(&mut h, NO_INDEX); // comment
    h
}

impl AxmlWriter {
    pub fn new(utf8: bool) -> Self {
        Self {
            utf8,
            nodes: Vec::new(),
        }
    }

    pub fn start(&mut self, name: &str, attrs: Vec<Attr>) -> &mut Self {
        self.nodes.push(Node::Start(name.to_string(), attrs));
        self
    }

    pub fn end(&mut self, name: &str) -> &mut Self {
        self.nodes.push(Node::End(name.to_string()));
        self
    }

    pub fn finish(&self) -> Vec<u8> {
        // Attribute names carrying resource ids lead the pool so the
        // resource map can index them positionally.
        let mut mapped: Vec<(String, u32)> = Vec::new();
        for n in &self.nodes {
            if let Node::Start(_, attrs) = n {
                for a in attrs {
                    if let Some(id) = a.res_id {
                        let nm = if a.anonymous {
                            String::new()
                        } else {
                            a.name.clone()
                        };
                        if !mapped.iter().any(|(s, i)| *s == nm && *i == id) {
                            mapped.push((nm, id));
                        }
                    }
                }
            }
        }
        let mut pool = Pool {
            strings: mapped.iter().map(|(s, _)| s.clone()).collect(),
        };
        let uses_android = self
            .nodes
            .iter()
            .any(|n| matches!(n, Node::Start(_, a) if a.iter().any(|x| x.android)));
        let (ns_prefix, ns_uri) = if uses_android {
            (pool.idx("android"), pool.idx(ANDROID_NS))
        } else {
            (NO_INDEX, NO_INDEX)
        };

        let mut body = Vec::new();
        if uses_android {
            let mut ns = Vec::new();
            push_u32(&mut ns, ns_prefix);
            push_u32(&mut ns, ns_uri);
            body.extend(chunk(RES_XML_START_NAMESPACE_TYPE, 16, &node_header(), &ns));
        }
        for n in &self.nodes {
            match n {
                Node::Start(name, attrs) => {
                    let mut b = Vec::new();
                    push_u32(&mut b, NO_INDEX);
                    push_u32(&mut b, pool.idx(name));
                    push_u16(&mut b, 0x14);
                    push_u16(&mut b, 0x14);
                    push_u16(&mut b, attrs.len() as u16);
                    push_u16(&mut b, 0);
                    push_u16(&mut b, 0);
                    push_u16(&mut b, 0);
                    for a in attrs {
                        let name_idx = match a.res_id {
                            Some(id) => {
                                let nm = if a.anonymous { "" } else { a.name.as_str() };
                                mapped
                                    .iter()
                                    .position(|(s, i)| s == nm && *i == id)
                                    .expect("mapped") as u32
                            }
                            None => pool.idx(&a.name),
                        };
                        push_u32(&mut b, if a.android { ns_uri } else { NO_INDEX });
                        push_u32(&mut b, name_idx);
                        let (raw, dtype, data) = match &a.value {
                            Value::Str(s) => {
                                let i = pool.idx(s);
                                (i, 0x03u8, i)
                            }
                            Value::Int(v) => (NO_INDEX, 0x10, *v as u32),
                            Value::Bool(v) => (NO_INDEX, 0x12, if *v { 0xFFFF_FFFF } else { 0 }),
                            Value::Ref(v) => (NO_INDEX, 0x01, *v),
                        };
                        push_u32(&mut b, raw);
                        push_u16(&mut b, 8);
                        b.push(0);
                        b.push(dtype);
                        push_u32(&mut b, data);
                    }
                    body.extend(chunk(RES_XML_START_ELEMENT_TYPE, 16, &node_header(), &b));
                }
                Node::End(name) => {
                    let mut b = Vec::new();
                    push_u32(&mut b, NO_INDEX);
                    push_u32(&mut b, pool.idx(name));
                    body.extend(chunk(RES_XML_END_ELEMENT_TYPE, 16, &node_header(), &b));
                }
            }
        }
        if uses_android {
            let mut ns = Vec::new();
            push_u32(&mut ns, ns_prefix);
            push_u32(&mut ns, ns_uri);
            body.extend(chunk(RES_XML_END_NAMESPACE_TYPE, 16, &node_header(), &ns));
        }

        let mut inner = string_pool(&pool.strings, self.utf8);
        if !mapped.is_empty() {
            let mut ids = Vec::new();
            for (_, id) in &mapped {
                push_u32(&mut ids, *id);
            }
            inner.extend(chunk(RES_XML_RESOURCE_MAP_TYPE, 8, &[], &ids));
        }
        inner.extend(body);
        chunk(RES_XML_TYPE, 8, &[], &inner)
    }
}

/// Declarative manifest used to generate fixtures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ManifestSpec {
    pub package: String,
    pub permissions: Vec<String>,
    /// `(class name as written, has MAIN+LAUNCHER filter)`.
    pub activities: Vec<(String, bool)>,
    pub min_sdk: Option<i32>,
    pub target_sdk: Option<i32>,
    pub utf8: bool,
    /// Strip attribute-name strings, leaving only resource ids.
    pub anonymous_attrs: bool,
}

impl ManifestSpec {
    pub fn new(package: &str) -> Self {
        Self {
            package: package.to_string(),
            ..Default::default()
        }
    }

    pub fn permission(mut self, p: &str) -> Self {
        self.permissions.push(p.to_string());
        self
    }

    pub fn activity(mut self, name: &str, launcher: bool) -> Self {
        self.activities.push((name.to_string(), launcher));
        self
    }

    pub fn sdk(mut self, min: i32, target: i32) -> Self {
        self.min_sdk = Some(min);
        self.target_sdk = Some(target);
        self
    }

    pub fn utf8(mut self, yes: bool) -> Self {
        self.utf8 = yes;
        self
    }

    pub fn to_axml(&self) -> Vec<u8> {
        let a = |name: &str, v: Value| {
            let at = Attr::android(name, v);
            if self.anonymous_attrs {
                at.anonymous()
            } else {
                at
            }
        };
        let mut w = AxmlWriter::new(self.utf8);
        w.start(
            "manifest",
            vec![
                Attr::plain("package", Value::Str(self.package.clone())),
                a("versionCode", Value::Int(1)),
            ],
        );
        if self.min_sdk.is_some() || self.target_sdk.is_some() {
            let mut attrs = Vec::new();
            if let Some(v) = self.min_sdk {
                attrs.push(a("minSdkVersion", Value::Int(v)));
            }
            if let Some(v) = self.target_sdk {
                attrs.push(a("targetSdkVersion", Value::Int(v)));
            }
            w.start("uses-sdk", attrs).end("uses-sdk");
        }
        for p in &self.permissions {
            w.start("uses-permission", vec![a("name", Value::Str(p.clone()))])
                .end("uses-permission");
        }
        w.start("application", vec![a("debuggable", Value::Bool(false))]);
        for (name, launcher) in &self.activities {
            w.start("activity", vec![a("name", Value::Str(name.clone()))]);
            if *launcher {
                w.start("intent-filter", vec![])
                    .start(
                        "action",
                        vec![a("name", Value::Str("android.intent.action.MAIN".into()))],
                    )
                    .end("action")
                    .start(
                        "category",
                        vec![a(
                            "name",
                            Value::Str("android.intent.category.LAUNCHER".into()),
                        )],
                    )
                    .end("category")
                    .end("intent-filter");
            }
            w.end("activity");
        }
        w.end("application").end("manifest");
        w.finish()
    }
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::axml::{self, AttrValue, Attribute, AxmlDocument, XmlEvent};
use super::ApkError;

pub const ANDROID_NS: &str = "http://schemas.android.com/apk/res/android";
const ACTION_MAIN: &str = "android.intent.action.MAIN";
const CATEGORY_LAUNCHER: &str = "android.intent.category.LAUNCHER";

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestInfo {
    pub package_name: String,
    /// Fully-qualified launcher activity (MAIN action + LAUNCHER category).
    pub main_activity: Option<String>,
    pub permissions: BTreeSet<String>,
    pub min_sdk: Option<i64>,
    pub target_sdk: Option<i64>,
}

/// Parse a binary `AndroidManifest.xml`.
pub fn parse_manifest(axml_bytes: &[u8]) -> Result<ManifestInfo, ApkError> {
    let doc = axml::parse(axml_bytes).map_err(|e| ApkError::ManifestUndecodable(e.to_string()))?;
    manifest_from_document(&doc)
}

fn attr<'a>(attrs: &'a [Attribute], name: &str) -> Option<&'a AttrValue> {
    // Prefer the android-namespaced attribute, fall back to any namespace.
    attrs
        .iter()
        .find(|a| a.name == name && a.namespace.as_deref() == Some(ANDROID_NS))
        .or_else(|| attrs.iter().find(|a| a.name == name))
        .map(|a| &a.value)
}

fn attr_str(attrs: &[Attribute], name: &str) -> Option<String> {
    attr(attrs, name)
        .and_then(AttrValue::as_str)
        .map(str::to_string)
}

/// Resolve a component name the way the package manager does.
pub fn qualify_class_name(package: &str, name: &str) -> String {
    if let Some(rest) = name.strip_prefix('.') {
        format!("{package}.{rest}")
    } else if !name.contains('.') && !package.is_empty() {
        format!("{package}.{name}")
    } else {
        name.to_string()
    }
}

struct ActivityScope {
    name: Option<String>,
    depth: usize,
    in_filter: bool,
    has_main: bool,
    has_launcher: bool,
    is_launcher: bool,
}

pub fn manifest_from_document(doc: &AxmlDocument) -> Result<ManifestInfo, ApkError> {
    let mut info = ManifestInfo::default();
    let mut seen_manifest = false;
    let mut depth = 0usize;
    let mut activity: Option<ActivityScope> = None;
    let mut launcher_raw: Option<String> = None;

    for ev in &doc.events {
        match ev {
            XmlEvent::Start {
                name, attributes, ..
            } => {
                depth += 1;
                match name.as_str() {
                    "manifest" if depth == 1 => {
                        seen_manifest = true;
                        info.package_name = attr_str(attributes, "package").unwrap_or_default();
                    }
                    "uses-permission" | "uses-permission-sdk-23" | "uses-permission-sdk-m" => {
                        if let Some(p) = attr_str(attributes, "name") {
                            info.permissions.insert(p);
                        }
                    }
                    "uses-sdk" => {
                        info.min_sdk =
                            attr(attributes, "minSdkVersion").and_then(AttrValue::as_int);
                        info.target_sdk =
                            attr(attributes, "targetSdkVersion").and_then(AttrValue::as_int);
                    }
                    "activity" | "activity-alias" if activity.is_none() => {
                        let target = if name == "activity-alias" {
                            attr_str(attributes, "targetActivity")
                        } else {
                            None
                        };
                        activity = Some(ActivityScope {
                            name: target.or_else(|| attr_str(attributes, "name")),
                            depth,
                            in_filter: false,
                            has_main: false,
                            has_launcher: false,
                            is_launcher: false,
                        });
                    }
                    "intent-filter" => {
                        if let Some(a) = activity.as_mut() {
                            a.in_filter = true;
                            a.has_main = false;
                            a.has_launcher = false;
                        }
                    }
                    "action" => {
                        if let Some(a) = activity.as_mut().filter(|a| a.in_filter) {
                            a.has_main |=
                                attr_str(attributes, "name").as_deref() == Some(ACTION_MAIN);
                        }
                    }
                    "category" => {
                        if let Some(a) = activity.as_mut().filter(|a| a.in_filter) {
                            a.has_launcher |=
                                attr_str(attributes, "name").as_deref() == Some(CATEGORY_LAUNCHER);
                        }
                    }
                    _ => {}
                }
            }
            XmlEvent::End { name } => {
                if name == "intent-filter" {
                    if let Some(a) = activity.as_mut() {
                        a.in_filter = false;
                        a.is_launcher |= a.has_main && a.has_launcher;
                    }
                } else if activity.as_ref().is_some_and(|a| a.depth == depth) {
                    let a = activity.take().expect("checked");
                    if a.is_launcher && launcher_raw.is_none() {
                        launcher_raw = a.name;
                    }
                }
                depth = depth.saturating_sub(1);
            }
            XmlEvent::Text(_) => {}
        }
    }
    if !seen_manifest {
        return Err(ApkError::ManifestUndecodable(
            "no <manifest> root element".into(),
        ));
    }
    info.main_activity = launcher_raw.map(|n| qualify_class_name(&info.package_name, &n));
    Ok(info)
}

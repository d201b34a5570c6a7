use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ManifestInfo;

const EMBEDDED_DANGEROUS: &str = include_str!("../../data/dangerous_permissions.txt");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermissionProfile {
    pub dangerous_count: usize,
    pub normal_count: usize,
    pub all_count: usize,
}

/// Short names (`CAMERA`) are expanded into the platform namespace.
pub fn canonical_permission(name: &str) -> String {
    let name = name.trim();
    if name.contains('.') {
        name.to_string()
    } else {
        format!("android.permission.{name}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DangerousPermissions {
    names: BTreeSet<String>,
}

impl DangerousPermissions {
    /// Newline-delimited permission names; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let names = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(canonical_permission)
            .collect();
        Self { names }
    }

    pub fn embedded() -> Self {
        Self::parse(EMBEDDED_DANGEROUS)
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self {
            names: names
                .into_iter()
                .map(|n| canonical_permission(n.as_ref()))
                .collect(),
        }
    }

    pub fn contains(&self, permission: &str) -> bool {
        self.names.contains(&canonical_permission(permission))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

pub fn permission_profile(
    manifest: &ManifestInfo,
    dangerous: &DangerousPermissions,
) -> PermissionProfile {
    let unique: BTreeSet<String> = manifest
        .permissions
        .iter()
        .map(|p| canonical_permission(p))
        .collect();
    let dangerous_count = unique.iter().filter(|p| dangerous.contains(p)).count();
    PermissionProfile {
        dangerous_count,
        normal_count: unique.len() - dangerous_count,
        all_count: unique.len(),
    }
}

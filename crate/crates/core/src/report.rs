//! The JSON document written by `classify` and `pmin`.

use serde::Serialize;

use crate::analysis::BridgeReport;
use crate::contraction::ContractionReport;

#[derive(Debug, Clone, Default, Serialize)]
pub struct ReportDocument {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contraction: Option<ContractionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bridge: Option<BridgeReport>,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }
}

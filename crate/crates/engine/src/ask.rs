use soundstage_core::templates::{TemplateId, Variables};
use soundstage_providers::{Attachment, Providers};

use crate::error::Result;
use crate::schema::{Checked, Violation};

/// Retries after a rejected response; each retry carries the violation as feedback.
pub const DEFAULT_RETRIES: u32 = 2;

pub(crate) struct Rejected {
    pub violation: Violation,
    pub attempts: u32,
}

/// Sends a template and parses the reply, retrying on schema violations.
/// Provider errors end the loop at once.
pub(crate) async fn ask<T>(
    providers: &Providers,
    template: TemplateId,
    variables: &Variables,
    attachments: &[Attachment],
    retries: u32,
    parse: impl Fn(&str) -> Checked<T>,
) -> Result<Result<T, Rejected>> {
    let mut feedback = None;
    let mut attempt = 0;
    loop {
        attempt += 1;
        let text = providers
            .llm_complete(template, variables, attachments.to_vec(), feedback.take())
            .await?;
        match parse(&text) {
            Ok(v) => return Ok(Ok(v)),
            Err(violation) => {
                tracing::warn!(template = %template, attempt, %violation, "response rejected");
                if attempt > retries {
                    return Ok(Err(Rejected { violation, attempts: attempt }));
                }
                feedback = Some(violation.to_string());
            }
        }
    }
}

/// Seconds as template text: whole numbers bare, otherwise two decimals.
pub fn seconds_text(s: f64) -> String {
    if (s - s.round()).abs() < 1e-9 {
        format!("{}", s.round() as i64)
    } else {
        format!("{s:.2}")
    }
}

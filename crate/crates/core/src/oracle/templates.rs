//! Question wording, one template per certificate code. Placeholders in
//! braces are filled from the pair's evidence; unknown names stay verbatim.

use std::collections::BTreeMap;

use crate::model::CertificateCode;

const CLOSE: &str = " Direction: FWD ({x} -> {y}) / BWD ({y} -> {x}) / ABSENT?";

pub const EDGE_TEMPLATES: &[(CertificateCode, &str)] = &[
    (
        CertificateCode::ImpossibleR1,
        "Edge {x}-{y}: both directions fit a linear model with Gaussian residuals equally well, so the data cannot orient it. Which variable acts on the other?",
    ),
    (
        CertificateCode::ImpossibleLatentLikely,
        "Edge {x}-{y}: BOTH linear and nonlinear ANM reject independence in both directions. Most likely an unmeasured confounder. Is the {x}-{y} dependence direct, or due to an unmeasured common cause?",
    ),
    (
        CertificateCode::ImpossibleRegressorInconsistent,
        "Edge {x}-{y}: the linear and nonlinear regressions point in opposite directions. Which direction matches the mechanism you know?",
    ),
    (
        CertificateCode::ImpossibleNonlinearWeak,
        "Edge {x}-{y}: nonlinear ANM is decisive at the {alpha} level but the asymmetry margin is weak (max p = {max_p}).",
    ),
    (
        CertificateCode::ImpossibleHocAmbiguous,
        "Edge {x}-{y}: the data are non-Gaussian but the higher-order cumulant score ({hoc}) is too small to pick a direction. Which variable is upstream?",
    ),
    (
        CertificateCode::ImpossibleAmbiguous,
        "Edge {x}-{y}: no identifiability tier reached a decision. Is there a direct effect, and if so which way does it run?",
    ),
    (
        CertificateCode::ImpossibleL0DisagreesWithHighTier,
        "Edge {x}-{y}: the linear test favoured {l0_dir} but {dissent} favoured the reverse. Which direction is right?",
    ),
    (
        CertificateCode::ImpossibleCircular,
        "Edge {x}-{y}: one of the variables is circular (an angle or phase), where regression asymmetries do not apply. Which variable drives the other?",
    ),
    (
        CertificateCode::ImpossibleBinaryContinuous,
        "Edge {x}-{y}: a binary variable is paired with a continuous one. Does the binary variable switch the continuous one, or does the continuous one set a threshold for the binary one?",
    ),
    (
        CertificateCode::ImpossibleCount,
        "Edge {x}-{y}: at least one variable is an overdispersed count. Does the count arise from the other variable, or does it drive it?",
    ),
    (
        CertificateCode::ImpossibleHighCardinalityDiscrete,
        "Edge {x}-{y}: a discrete variable has too many levels for the discrete tests. Which variable is set first in the process that generated them?",
    ),
    (
        CertificateCode::ResolvedDecisive,
        "Edge {x}-{y}: the data already oriented this edge. Please confirm the direction.",
    ),
    (
        CertificateCode::ResolvedMediated,
        "Edge {x}-{y}: the dependence vanished given observed mediators. Is there nevertheless a direct effect?",
    ),
];

pub const META_HUB_TEMPLATE: &str =
    "List the {k} variables with the most direct effects on other variables (largest out-degree), most influential first.";

pub const NODE_CHILDREN_TEMPLATE: &str =
    "Which variables does {v} directly affect? List every direct child of {v}, or none.";

pub const MISSING_EDGE_TEMPLATE: &str =
    "Edge {x}-{y}: the skeleton test found no dependence, but the pair remains plausible. Is there a direct effect?";

pub fn edge_template(code: CertificateCode) -> &'static str {
    EDGE_TEMPLATES
        .iter()
        .find(|(c, _)| *c == code)
        .map(|(_, t)| *t)
        .unwrap_or(EDGE_TEMPLATES[5].1)
}

/// Replace every `{name}` found in `vars`.
pub fn render(template: &str, vars: &BTreeMap<&str, String>) -> String {
    let mut out = String::with_capacity(template.len() + 32);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        match tail.find('}') {
            Some(end) => {
                let name = &tail[1..end];
                match vars.get(name) {
                    Some(v) => out.push_str(v),
                    None => out.push_str(&tail[..=end]),
                }
                rest = &tail[end + 1..];
            }
            None => {
                out.push_str(tail);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Full per-edge question: certificate wording plus the answer prompt.
pub fn edge_question(code: CertificateCode, vars: &BTreeMap<&str, String>) -> String {
    let mut t = edge_template(code).to_string();
    t.push_str(CLOSE);
    render(&t, vars)
}

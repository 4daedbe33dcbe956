/// Outcome of the identifiability inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentifiabilityReport {
    /// One message per failed inequality, naming it.
    pub violations: Vec<String>,
}

impl IdentifiabilityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `TK >= N`, `TKM >= LN`, `MK >= L`, and `K1 >= L` when `k1` is given.
pub fn identifiability_check(
    m: usize,
    l: usize,
    n: usize,
    t: usize,
    k: usize,
    k1: Option<usize>,
) -> IdentifiabilityReport {
    let mut violations = Vec::new();
    if t * k < n {
        violations.push(format!("TK >= N violated: T*K = {} < N = {n}", t * k));
    }
    if t * k * m < l * n {
        violations.push(format!(
            "TKM >= LN violated: T*K*M = {} < L*N = {}",
            t * k * m,
            l * n
        ));
    }
    if m * k < l {
        violations.push(format!("MK >= L violated: M*K = {} < L = {l}", m * k));
    }
    if let Some(k1) = k1 {
        if k1 < l {
            violations.push(format!("K1 >= L violated: K1 = {k1} < L = {l}"));
        }
    }
    IdentifiabilityReport { violations }
}

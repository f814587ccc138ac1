//! Minimal CSV emission with significant-digit formatting.

/// Formats `v` with `digits` significant digits: positional notation for
/// moderate magnitudes, scientific otherwise.
pub fn significant(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if exp < -4 || exp >= digits as i32 {
        sci
    } else {
        format!("{:.*}", (digits as i32 - 1 - exp) as usize, v)
    }
}

#[derive(Debug, Default)]
pub struct Table {
    out: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut t = Table::default();
        t.push_row(header.iter().map(|s| s.to_string()));
        t
    }

    pub fn push_row(&mut self, cells: impl IntoIterator<Item = String>) {
        let row: Vec<String> = cells.into_iter().collect();
        self.out.push_str(&row.join(","));
        self.out.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.out
    }
}

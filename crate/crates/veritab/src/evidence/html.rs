//! Canonical HTML serialization for tables.
//!
//! The output grammar is fixed so the same table always renders to the same
//! bytes: no whitespace between tags, no attributes, `&`, `<`, `>` escaped.
//! The first header cell is always empty; it sits above the row-label column.
//! `parse_table_html` accepts exactly this grammar and nothing else, so
//! render and parse form a lossless round trip over cell text.

use super::{Cell, EvidenceError, Row, Table};

/// Renders a table to the canonical single-line HTML form.
pub fn render_table_html(table: &Table) -> String {
    let mut out = String::new();
    out.push_str("<table><caption>");
    out.push_str(&escape(&table.caption));
    out.push_str("</caption><thead><tr><th></th>");
    for col in &table.columns {
        out.push_str("<th>");
        out.push_str(&escape(col));
        out.push_str("</th>");
    }
    out.push_str("</tr></thead><tbody>");
    for row in &table.rows {
        out.push_str("<tr><td>");
        out.push_str(&escape(&row.label));
        out.push_str("</td>");
        for cell in &row.cells {
            out.push_str("<td>");
            out.push_str(&escape(&cell.text));
            out.push_str("</td>");
        }
        out.push_str("</tr>");
    }
    out.push_str("</tbody></table>");
    out
}

/// Parses the canonical HTML form back into a table.
pub fn parse_table_html(html: &str) -> Result<Table, EvidenceError> {
    let mut p = Parser { input: html, pos: 0 };
    p.expect("<table><caption>")?;
    let caption = p.text_until("</caption>")?;
    p.expect("<thead><tr><th></th>")?;
    let mut columns = Vec::new();
    while p.peek("<th>") {
        p.expect("<th>")?;
        columns.push(p.text_until("</th>")?);
    }
    p.expect("</tr></thead><tbody>")?;
    let mut rows = Vec::new();
    while p.peek("<tr>") {
        p.expect("<tr><td>")?;
        let label = p.text_until("</td>")?;
        let mut cells = Vec::new();
        while p.peek("<td>") {
            p.expect("<td>")?;
            cells.push(Cell::new(p.text_until("</td>")?));
        }
        p.expect("</tr>")?;
        if cells.len() != columns.len() {
            return Err(EvidenceError::MalformedRecord(format!(
                "row {:?} has {} cells for {} columns",
                label,
                cells.len(),
                columns.len()
            )));
        }
        rows.push(Row { label, cells });
    }
    p.expect("</tbody></table>")?;
    if p.pos != p.input.len() {
        return Err(p.error("trailing content after </table>"));
    }
    Table::new(caption, columns, rows)
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: &str) -> EvidenceError {
        EvidenceError::MalformedRecord(format!("{msg} at byte {}", self.pos))
    }

    fn peek(&self, token: &str) -> bool {
        self.input[self.pos..].starts_with(token)
    }

    fn expect(&mut self, token: &str) -> Result<(), EvidenceError> {
        if self.peek(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(&format!("expected {token:?}")))
        }
    }

    /// Consumes escaped text up to (and past) the closing token.
    fn text_until(&mut self, closing: &str) -> Result<String, EvidenceError> {
        let rest = &self.input[self.pos..];
        let end = rest
            .find(closing)
            .ok_or_else(|| self.error(&format!("missing {closing:?}")))?;
        let raw = &rest[..end];
        if raw.contains('<') || raw.contains('>') {
            return Err(self.error("unescaped angle bracket in text"));
        }
        let text = unescape(raw, self.pos)?;
        self.pos += end + closing.len();
        Ok(text)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

fn unescape(s: &str, at: usize) -> Result<String, EvidenceError> {
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(idx) = rest.find('&') {
        out.push_str(&rest[..idx]);
        rest = &rest[idx..];
        if let Some(r) = rest.strip_prefix("&amp;") {
            out.push('&');
            rest = r;
        } else if let Some(r) = rest.strip_prefix("&lt;") {
            out.push('<');
            rest = r;
        } else if let Some(r) = rest.strip_prefix("&gt;") {
            out.push('>');
            rest = r;
        } else {
            return Err(EvidenceError::MalformedRecord(format!(
                "bare ampersand in text near byte {at}"
            )));
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_by_one() -> Table {
        Table::new(
            "Water use",
            vec!["2023".into()],
            vec![Row {
                label: "Total".into(),
                cells: vec![Cell::new("145,770")],
            }],
        )
        .unwrap()
    }

    #[test]
    fn renders_one_by_one_exactly() {
        assert_eq!(
            render_table_html(&one_by_one()),
            "<table><caption>Water use</caption><thead><tr><th></th><th>2023</th>\
             </tr></thead><tbody><tr><td>Total</td><td>145,770</td></tr></tbody></table>"
        );
    }

    #[test]
    fn escapes_and_round_trips_special_chars() {
        let t = Table::new(
            "a & b <c>",
            vec!["x>y".into()],
            vec![Row {
                label: "p&q".into(),
                cells: vec![Cell::new("<1>")],
            }],
        )
        .unwrap();
        let html = render_table_html(&t);
        assert!(html.contains("a &amp; b &lt;c&gt;"));
        let back = parse_table_html(&html).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_sloppy_markup() {
        assert!(parse_table_html("<table border=1>").is_err());
        assert!(parse_table_html(
            "<table><caption>c</caption><thead><tr><th></th><th>A</th></tr></thead>\
             <tbody><tr><td>r</td><td>1</td></tr></tbody></table> "
        )
        .is_err());
        // Ragged row: one cell for two columns.
        assert!(parse_table_html(
            "<table><caption></caption><thead><tr><th></th><th>A</th><th>B</th></tr>\
             </thead><tbody><tr><td>r</td><td>1</td></tr></tbody></table>"
        )
        .is_err());
    }
}

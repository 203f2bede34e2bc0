//! Per-action cost report, as an aligned table or CSV.

use luce_core::costmodel::CostRow;

const HEADER: [&str; 6] = ["action", "tx_gas", "exec_gas", "eth", "usd", "note"];

fn cells(r: &CostRow) -> [String; 6] {
    [
        r.action.clone(),
        r.transaction_gas.to_string(),
        r.execution_gas.to_string(),
        r.eth.to_string(),
        r.usd.to_string(),
        r.note.clone().unwrap_or_default(),
    ]
}

/// Text columns left-aligned, numbers right-aligned; the note column is
/// not padded.
pub fn render_table(rows: &[CostRow]) -> String {
    let body: Vec<[String; 6]> = rows.iter().map(cells).collect();
    let mut width = HEADER.map(str::len);
    for r in &body {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |r: [&str; 6]| {
        let mut s = format!(
            "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}  {:>w4$}",
            r[0],
            r[1],
            r[2],
            r[3],
            r[4],
            w0 = width[0],
            w1 = width[1],
            w2 = width[2],
            w3 = width[3],
            w4 = width[4],
        );
        if !r[5].is_empty() {
            s.push_str("  ");
            s.push_str(r[5]);
        }
        s.trim_end().to_string()
    };
    let mut out = line(HEADER);
    out.push('\n');
    for r in &body {
        out.push_str(&line([&r[0], &r[1], &r[2], &r[3], &r[4], &r[5]]));
        out.push('\n');
    }
    out
}

pub fn render_csv(rows: &[CostRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(cells(r)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

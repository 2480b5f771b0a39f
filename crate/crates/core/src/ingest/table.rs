use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Text cells exactly as read from the CSV, one `Vec` per record, aligned to
/// `column_order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    column_order: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Borrowed view of one record.
#[derive(Debug, Clone, Copy)]
pub struct RawRecord<'a> {
    columns: &'a [String],
    cells: &'a [String],
}

impl<'a> RawRecord<'a> {
    pub fn get(&self, column: &str) -> Result<&'a str> {
        self.columns
            .iter()
            .position(|c| c == column)
            .map(|i| self.cells[i].as_str())
            .ok_or_else(|| Error::UnknownColumn(column.to_string()))
    }

    pub fn cells(&self) -> &'a [String] {
        self.cells
    }
}

impl RawTable {
    pub fn new(column_order: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != column_order.len() {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: column_order.len(),
                    found: r.len(),
                });
            }
        }
        Ok(Self { column_order, rows })
    }

    pub fn column_order(&self) -> &[String] {
        &self.column_order
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn record(&self, i: usize) -> RawRecord<'_> {
        RawRecord {
            columns: &self.column_order,
            cells: &self.rows[i],
        }
    }

    pub fn records(&self) -> impl Iterator<Item = RawRecord<'_>> {
        self.rows.iter().map(move |cells| RawRecord {
            columns: &self.column_order,
            cells,
        })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_order
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Rows at the given positions, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            column_order: self.column_order.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(Error::NoHeader),
        };
        let mut column_order: Vec<String> = header.iter().map(str::to_string).collect();
        if let Some(first) = column_order.first_mut() {
            if let Some(stripped) = first.strip_prefix('\u{feff}') {
                *first = stripped.to_string();
            }
        }
        if column_order.len() == 1 && column_order[0].is_empty() {
            return Err(Error::NoHeader);
        }
        let mut rows = Vec::new();
        for (i, rec) in records.enumerate() {
            let rec = rec?;
            if rec.len() != column_order.len() {
                return Err(Error::RaggedRow {
                    row: i,
                    expected: column_order.len(),
                    found: rec.len(),
                });
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { column_order, rows })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.column_order)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Read a header-first, comma-separated UTF-8 file.
pub fn load_csv(path: impl AsRef<Path>) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    RawTable::from_reader(file)
}

/// Keep rows whose `required` cells are all non-blank. Order is preserved.
pub fn drop_missing(t: &RawTable, required: &[String]) -> Result<RawTable> {
    let idx: Vec<usize> = required.iter().map(|c| t.column_index(c)).collect::<Result<_>>()?;
    let rows = t
        .rows
        .iter()
        .filter(|r| idx.iter().all(|&i| !r[i].trim().is_empty()))
        .cloned()
        .collect();
    Ok(RawTable {
        column_order: t.column_order.clone(),
        rows,
    })
}

/// Drop rows that repeat an earlier row cell-for-cell.
pub fn dedup(t: &RawTable) -> RawTable {
    let mut seen: HashSet<&[String]> = HashSet::with_capacity(t.len());
    let rows = t.rows.iter().filter(|r| seen.insert(r.as_slice())).cloned().collect();
    RawTable {
        column_order: t.column_order.clone(),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(src: &str) -> RawTable {
        RawTable::from_reader(src.as_bytes()).unwrap()
    }

    #[test]
    fn reads_header_and_rows() {
        let t = table("a,b\n1,2\n3,4\n");
        assert_eq!(t.len(), 2);
        assert_eq!(t.column_order(), &["a", "b"]);
        assert_eq!(t.record(1).get("b").unwrap(), "4");
    }

    #[test]
    fn quoted_fields_and_bom() {
        let t = table("\u{feff}name,note\n\"Jing'an\",\"a, b\"\n");
        assert_eq!(t.column_order()[0], "name");
        assert_eq!(t.record(0).get("note").unwrap(), "a, b");
    }

    #[test]
    fn empty_file_has_no_header() {
        assert!(matches!(RawTable::from_reader(&b""[..]), Err(Error::NoHeader)));
    }

    #[test]
    fn ragged_row_names_index() {
        match RawTable::from_reader(&b"a,b\n1,2\n3\n"[..]) {
            Err(Error::RaggedRow { row, expected, found }) => {
                assert_eq!((row, expected, found), (1, 2, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn drop_missing_filters_required_only() {
        let t = table("rent,x\n100,\n,1\n200,2\n");
        let out = drop_missing(&t, &["rent".into()]).unwrap();
        assert_eq!(out.len(), 2);
        let out = drop_missing(&t, &["rent".into(), "x".into()]).unwrap();
        assert_eq!(out.len(), 1);
        assert!(matches!(
            drop_missing(&t, &["nope".into()]),
            Err(Error::UnknownColumn(_))
        ));
        let clean = table("a\n1\n2\n");
        assert_eq!(drop_missing(&clean, &["a".into()]).unwrap(), clean);
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let t = table("a,b\n1,2\n1,2\n3,4\n1,2\n");
        let out = dedup(&t);
        assert_eq!(out.rows(), &[vec!["1", "2"], vec!["3", "4"]]);
        let three = table("a\nx\nx\nx\n");
        assert_eq!(dedup(&three).len(), 1);
        let distinct = table("a\nx\ny\n");
        assert_eq!(dedup(&distinct), distinct);
    }

    #[test]
    fn csv_round_trip() {
        let t = table("a,b\n\"x,y\",2\n3,\n");
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(RawTable::from_reader(&buf[..]).unwrap(), t);
    }
}

//! CSV encoding of [`BenchRecord`]s.

use std::io::{Read, Write};

use crate::bench::BenchRecord;

pub const HEADER: &str =
    "op,mode,n,tape_entries,tape_edges,tape_payload_scalars,tape_bytes,t_primal_s,t_adjoint_s,t_total_s";

/// Writes a header row and one row per record. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_csv<W: Write>(out: W, records: &[BenchRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(HEADER.split(','))?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{Mode, Op};

    #[test]
    fn header_and_round_trip() {
        let recs = vec![BenchRecord {
            op: Op::SolveQrFullpiv,
            mode: Mode::Algorithmic,
            n: 3,
            tape_entries: 10,
            tape_edges: 20,
            tape_payload_scalars: 0,
            tape_bytes: 480,
            t_primal_s: 0.1 + 0.2,
            t_adjoint_s: 1e-300,
            t_total_s: 0.30000000000000004 + 1e-300,
        }];
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), HEADER);
        assert!(text.contains("solve-qr-fullpiv,algorithmic,3,"));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), recs);
    }

    #[test]
    fn empty_file_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim_end(), HEADER);
    }
}

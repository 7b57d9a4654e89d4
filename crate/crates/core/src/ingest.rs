//! Span annotations, mask files and on-disk records.
//!
//! Annotation JSON:
//!
//! ```json
//! {"source": "synth seed=7", "spans": [{"start": 0.1, "end": 0.2, "label": "P"}]}
//! ```
//!
//! Mask CSV is a header `index,class` followed by one row per sample.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{LabelMask, SampledSignal, WaveClass};
use crate::synth::Record;

/// Slack for comparisons between span times and sample instants.
const TIME_EPS: f64 = 1e-9;

/// A labelled interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub start: f64,
    pub end: f64,
    #[serde(with = "wave_label")]
    pub label: WaveClass,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSet {
    pub source: String,
    pub spans: Vec<Span>,
}

mod wave_label {
    use serde::{de, Deserialize, Deserializer, Serializer};

    use crate::signal::WaveClass;

    pub fn serialize<S: Serializer>(c: &WaveClass, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(c.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<WaveClass, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "P" => Ok(WaveClass::P),
            "QRS" => Ok(WaveClass::Qrs),
            "T" => Ok(WaveClass::T),
            other => Err(de::Error::custom(format!("label `{other}` is not one of P, QRS, T"))),
        }
    }
}

impl AnnotationSet {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ParseError {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::IoFailure(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json_string()? + "\n")
            .map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))
    }

    /// Checks span ordering, non-overlap within each label and that every
    /// span ends within `duration` seconds.
    pub fn validate(&self, duration: f64) -> Result<()> {
        for (i, s) in self.spans.iter().enumerate() {
            if !(s.start.is_finite() && s.end.is_finite() && s.start >= 0.0 && s.start < s.end) {
                return Err(Error::ParseError {
                    location: format!("spans[{i}]"),
                    message: format!("need 0 <= start < end, got [{}, {})", s.start, s.end),
                });
            }
            if s.end > duration + TIME_EPS {
                return Err(Error::SpanOutOfRange { index: i, end: s.end, duration });
            }
        }
        for label in WaveClass::WAVES {
            let mut same: Vec<(usize, &Span)> = self.spans.iter().enumerate().filter(|(_, s)| s.label == label).collect();
            same.sort_by(|a, b| a.1.start.total_cmp(&b.1.start));
            for w in same.windows(2) {
                if w[1].1.start < w[0].1.end - TIME_EPS {
                    return Err(Error::ParseError {
                        location: format!("spans[{}]", w[1].0),
                        message: format!("{label} span overlaps spans[{}]", w[0].0),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Reads a signal CSV and its annotation JSON, rejecting spans past the end
/// of the signal.
pub fn load_record(signal_path: &Path, annotation_path: &Path) -> Result<(SampledSignal, AnnotationSet)> {
    let signal = SampledSignal::load(signal_path)?;
    let ann = AnnotationSet::load(annotation_path)?;
    ann.validate(signal.duration())?;
    Ok((signal, ann))
}

/// First sample index at or after time `t`.
fn first_sample_at(t: f64, fs: f64) -> usize {
    (t * fs - TIME_EPS).ceil().max(0.0) as usize
}

/// Sample `i` takes the label of the span containing `i / fs`; overlaps
/// resolve QRS over P over T.
pub fn rasterize(ann: &AnnotationSet, fs: f64, length: usize) -> LabelMask {
    let mut mask = LabelMask::background(length);
    let classes = mask.classes_mut();
    for s in &ann.spans {
        let lo = first_sample_at(s.start, fs).min(length);
        let hi = first_sample_at(s.end, fs).min(length);
        for c in &mut classes[lo..hi] {
            *c = c.resolve(s.label);
        }
    }
    mask
}

/// Contiguous runs of each wave class as spans, ordered by start time.
pub fn mask_to_spans(mask: &LabelMask, fs: f64) -> Vec<Span> {
    let mut spans: Vec<Span> = WaveClass::WAVES
        .iter()
        .flat_map(|&label| {
            mask.runs(label)
                .into_iter()
                .map(move |(s, e)| Span { start: s as f64 / fs, end: e as f64 / fs, label })
        })
        .collect();
    spans.sort_by(|a, b| a.start.total_cmp(&b.start));
    spans
}

pub fn write_mask_csv<W: Write>(mask: &LabelMask, mut w: W) -> Result<()> {
    writeln!(w, "index,class")?;
    for (i, c) in mask.classes().iter().enumerate() {
        writeln!(w, "{i},{c}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_mask_csv<R: BufRead>(r: R) -> Result<LabelMask> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some("index,class") {
        return Err(Error::ParseError { location: "line 1".into(), message: "expected header `index,class`".into() });
    }
    let mut classes = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let lineno = n + 2;
        if line.is_empty() {
            continue;
        }
        let located = |message: String| Error::ParseError { location: format!("line {lineno}"), message };
        let (idx, class) = line.split_once(',').ok_or_else(|| located(format!("expected 2 fields in `{line}`")))?;
        let idx: usize = idx.parse().map_err(|e| located(format!("index `{idx}`: {e}")))?;
        if idx != classes.len() {
            return Err(located(format!("index {idx} out of sequence, expected {}", classes.len())));
        }
        classes.push(class.parse::<WaveClass>().map_err(|e| located(e.to_string()))?);
    }
    Ok(LabelMask::new(classes))
}

pub fn export_mask(mask: &LabelMask, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    write_mask_csv(mask, std::io::BufWriter::new(f))
}

pub fn load_mask(path: &Path) -> Result<LabelMask> {
    let f = std::fs::File::open(path).map_err(|e| Error::IoFailure(format!("{}: {e}", path.display())))?;
    read_mask_csv(std::io::BufReader::new(f))
}

/// Writes `<name>.csv` and `<name>.json` into `dir`.
pub fn save_record(record: &Record, dir: &Path, source: &str) -> Result<()> {
    record.signal.save(&dir.join(format!("{}.csv", record.name)))?;
    let ann = AnnotationSet { source: source.into(), spans: mask_to_spans(&record.mask, record.signal.fs()) };
    ann.save(&dir.join(format!("{}.json", record.name)))
}

/// Loads every `<name>.csv` in `dir` that has a `<name>.json` beside it,
/// sorted by name.
pub fn load_record_dir(dir: &Path) -> Result<Vec<Record>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::IoFailure(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") && path.with_extension("json").exists() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                names.push(stem.to_string());
            }
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::EmptyDataset);
    }
    names
        .into_iter()
        .map(|name| {
            let (signal, ann) = load_record(&dir.join(format!("{name}.csv")), &dir.join(format!("{name}.json")))?;
            let mask = rasterize(&ann, signal.fs(), signal.len());
            Ok(Record { name, signal, mask })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(start: f64, end: f64, label: WaveClass) -> Span {
        Span { start, end, label }
    }

    #[test]
    fn rasterize_examples() {
        let empty = AnnotationSet::default();
        assert_eq!(rasterize(&empty, 250.0, 10), LabelMask::background(10));

        let p = AnnotationSet { source: String::new(), spans: vec![span(0.1, 0.2, WaveClass::P)] };
        let m = rasterize(&p, 250.0, 100);
        let labelled: Vec<usize> = (0..100).filter(|&i| m.classes()[i] == WaveClass::P).collect();
        assert_eq!(labelled, (25..=49).collect::<Vec<_>>());

        let both = AnnotationSet {
            source: String::new(),
            spans: vec![span(0.0, 0.1, WaveClass::P), span(0.05, 0.15, WaveClass::Qrs), span(0.0, 0.2, WaveClass::T)],
        };
        let m = rasterize(&both, 100.0, 20);
        assert_eq!(m.classes()[4], WaveClass::P);
        assert_eq!(m.classes()[7], WaveClass::Qrs);
        assert_eq!(m.classes()[12], WaveClass::Qrs);
        assert_eq!(m.classes()[17], WaveClass::T);
    }

    #[test]
    fn labels_are_exact() {
        let bad = r#"{"source": "x", "spans": [{"start": 0.0, "end": 0.1, "label": "QRS "}]}"#;
        assert!(matches!(AnnotationSet::from_json_str(bad), Err(Error::ParseError { .. })));
        let bg = r#"{"source": "x", "spans": [{"start": 0.0, "end": 0.1, "label": "BACKGROUND"}]}"#;
        assert!(AnnotationSet::from_json_str(bg).is_err());
        let ok = r#"{"source": "x", "spans": [{"start": 0.0, "end": 0.1, "label": "QRS"}]}"#;
        assert_eq!(AnnotationSet::from_json_str(ok).unwrap().spans[0].label, WaveClass::Qrs);
    }

    #[test]
    fn span_bounds() {
        let ann = AnnotationSet {
            source: String::new(),
            spans: vec![span(0.0, 0.5, WaveClass::P), span(0.9, 1.2, WaveClass::T)],
        };
        assert_eq!(ann.validate(1.0), Err(Error::SpanOutOfRange { index: 1, end: 1.2, duration: 1.0 }));
        assert!(ann.validate(1.2).is_ok());
        let overlap = AnnotationSet {
            source: String::new(),
            spans: vec![span(0.0, 0.5, WaveClass::P), span(0.4, 0.6, WaveClass::P)],
        };
        assert!(matches!(overlap.validate(1.0), Err(Error::ParseError { .. })));
    }

    #[test]
    fn mask_csv_round_trip() {
        let mask = LabelMask::new(vec![WaveClass::Background, WaveClass::P, WaveClass::Qrs, WaveClass::T]);
        let mut buf = Vec::new();
        write_mask_csv(&mask, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "index,class\n0,BACKGROUND\n1,P\n2,QRS\n3,T\n");
        assert_eq!(read_mask_csv(buf.as_slice()).unwrap(), mask);

        let mut empty = Vec::new();
        write_mask_csv(&LabelMask::default(), &mut empty).unwrap();
        assert_eq!(empty, b"index,class\n");

        let err = read_mask_csv("index,class\n0,P\n2,T\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::ParseError { ref location, .. } if location == "line 3"));
    }

    #[test]
    fn spans_round_trip() {
        let mask = LabelMask::new(
            [0, 1, 1, 0, 2, 2, 2, 3, 3, 0].iter().map(|&i| WaveClass::from_id(i).unwrap()).collect(),
        );
        let ann = AnnotationSet { source: String::new(), spans: mask_to_spans(&mask, 250.0) };
        assert_eq!(rasterize(&ann, 250.0, mask.len()), mask);
    }
}

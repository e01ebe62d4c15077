//! A small column store: numeric columns (`NaN` = missing) and label
//! columns used for fixed effects and clusters.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frame {
    len: usize,
    numeric: Vec<(String, Vec<f64>)>,
    labels: Vec<(String, Vec<String>)>,
}

impl Frame {
    pub fn new(len: usize) -> Frame {
        Frame {
            len,
            ..Frame::default()
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Adds or replaces a numeric column.
    ///
    /// # Panics
    /// If the column length differs from the frame length.
    pub fn set_numeric(&mut self, name: &str, values: Vec<f64>) {
        assert_eq!(values.len(), self.len, "column `{name}` has the wrong length");
        match self.numeric.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = values,
            None => self.numeric.push((name.to_string(), values)),
        }
    }

    pub fn set_optional(&mut self, name: &str, values: impl IntoIterator<Item = Option<f64>>) {
        self.set_numeric(name, values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }

    /// Adds or replaces a label column.
    ///
    /// # Panics
    /// If the column length differs from the frame length.
    pub fn set_label(&mut self, name: &str, values: Vec<String>) {
        assert_eq!(values.len(), self.len, "column `{name}` has the wrong length");
        match self.labels.iter_mut().find(|(n, _)| n == name) {
            Some((_, v)) => *v = values,
            None => self.labels.push((name.to_string(), values)),
        }
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        self.numeric.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn label(&self, name: &str) -> Option<&[String]> {
        self.labels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn has(&self, name: &str) -> bool {
        self.numeric(name).is_some() || self.label(name).is_some()
    }

    pub fn numeric_names(&self) -> impl Iterator<Item = &str> {
        self.numeric.iter().map(|(n, _)| n.as_str())
    }

    pub fn label_names(&self) -> impl Iterator<Item = &str> {
        self.labels.iter().map(|(n, _)| n.as_str())
    }

    /// Row `i` of a column rendered as text: labels verbatim, numbers with
    /// `Display`, missing values empty.
    pub fn cell(&self, name: &str, i: usize) -> Option<String> {
        if let Some(l) = self.label(name) {
            return Some(l[i].clone());
        }
        let v = self.numeric(name)?[i];
        Some(if v.is_nan() { String::new() } else { alloc::format!("{v}") })
    }

    /// A frame with the given rows, in the given order.
    pub fn take(&self, rows: &[usize]) -> Frame {
        Frame {
            len: rows.len(),
            numeric: self
                .numeric
                .iter()
                .map(|(n, v)| (n.clone(), rows.iter().map(|&i| v[i]).collect()))
                .collect(),
            labels: self
                .labels
                .iter()
                .map(|(n, v)| (n.clone(), rows.iter().map(|&i| v[i].clone()).collect()))
                .collect(),
        }
    }
}

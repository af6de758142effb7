//! Line-oriented weight manifest.
//!
//! Each non-empty, non-`#` line is one record:
//!
//! ```text
//! <name> (<d0>,<d1>,...) <v0> <v1> ...
//! ```
//!
//! Values are row-major and written with 17 significant digits, so every
//! `f64` survives a write/read cycle bit-for-bit. Convolutions are stored as
//! `<prefix>.weight`, `<prefix>.bias` and `<prefix>.config`
//! (`stride, pad_top, pad_bottom, pad_left, pad_right, groups`).

use std::fmt::Write as _;

use crate::error::{Error, Result};

use super::{ConvParams, DrcbParams, Padding, RepConvParams, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    records: Vec<Record>,
}

/// Shortest fixed form carrying 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn get(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|r| r.name == name)
    }

    fn require(&self, name: &str) -> Result<&Record> {
        self.get(name).ok_or_else(|| Error::param(format!("manifest has no record {name:?}")))
    }

    /// Adds or replaces a record.
    pub fn insert(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::param(format!("invalid record name {name:?}")));
        }
        if shape.iter().product::<usize>() != values.len() {
            return Err(Error::dim(format!("record {name}: shape {shape:?} does not hold {} values", values.len())));
        }
        let rec = Record { name, shape, values };
        match self.records.iter_mut().find(|r| r.name == rec.name) {
            Some(slot) => *slot = rec,
            None => self.records.push(rec),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        let mut offset = 0u64;
        for line in text.split_inclusive('\n') {
            let start = offset;
            offset += line.len() as u64;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { offset: start, message };
            let (name, rest) =
                line.split_once(char::is_whitespace).ok_or_else(|| err("record needs a name and a shape".into()))?;
            let rest = rest.trim_start();
            let close = rest
                .find(')')
                .filter(|_| rest.starts_with('('))
                .ok_or_else(|| err("shape must be a parenthesized tuple".into()))?;
            let shape = rest[1..close]
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| err(format!("bad shape entry {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let values = rest[close + 1..]
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| err(format!("bad coefficient {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            m.insert(name, shape, values).map_err(|e| err(e.to_string()))?;
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let dims: Vec<String> = r.shape.iter().map(usize::to_string).collect();
            let _ = write!(out, "{} ({})", r.name, dims.join(","));
            for &v in &r.values {
                out.push(' ');
                out.push_str(&format_value(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn insert_conv(&mut self, prefix: &str, p: &ConvParams) -> Result<()> {
        let w = &p.weight;
        self.insert(format!("{prefix}.weight"), w.shape().to_vec(), w.data().to_vec())?;
        self.insert(format!("{prefix}.bias"), vec![p.bias.len()], p.bias.clone())?;
        let pad = p.padding;
        let cfg = [p.stride, pad.top, pad.bottom, pad.left, pad.right, p.groups];
        self.insert(format!("{prefix}.config"), vec![6], cfg.iter().map(|&v| v as f64).collect())
    }

    pub fn conv(&self, prefix: &str) -> Result<ConvParams> {
        let w = self.require(&format!("{prefix}.weight"))?;
        let shape: [usize; 4] =
            w.shape.as_slice().try_into().map_err(|_| Error::dim(format!("{prefix}.weight must be rank 4")))?;
        let weight = Tensor::from_vec(shape, w.values.clone())?;
        let bias = self.require(&format!("{prefix}.bias"))?.values.clone();
        let cfg = self.require(&format!("{prefix}.config"))?;
        let ints = integers(&cfg.values, &cfg.name)?;
        let [stride, top, bottom, left, right, groups]: [usize; 6] =
            ints.try_into().map_err(|_| Error::param(format!("{prefix}.config must hold 6 integers")))?;
        ConvParams::new(weight, bias, stride, Padding { top, bottom, left, right }, groups)
    }

    pub fn insert_repconv(&mut self, prefix: &str, p: &RepConvParams) -> Result<()> {
        self.insert_conv(&format!("{prefix}.branch3x3"), &p.branch3x3)?;
        self.insert_conv(&format!("{prefix}.branch1x1"), &p.branch1x1)?;
        if let Some(scale) = &p.identity_scale {
            self.insert(format!("{prefix}.identity_scale"), vec![scale.len()], scale.clone())?;
        }
        if let Some(fused) = &p.fused {
            self.insert_conv(&format!("{prefix}.fused"), fused)?;
        }
        Ok(())
    }

    pub fn repconv(&self, prefix: &str) -> Result<RepConvParams> {
        let mut p = RepConvParams::new(
            self.conv(&format!("{prefix}.branch3x3"))?,
            self.conv(&format!("{prefix}.branch1x1"))?,
            self.get(&format!("{prefix}.identity_scale")).map(|r| r.values.clone()),
        )?;
        if self.get(&format!("{prefix}.fused.weight")).is_some() {
            p.fused = Some(self.conv(&format!("{prefix}.fused"))?);
        }
        Ok(p)
    }

    pub fn insert_drcb(&mut self, prefix: &str, p: &DrcbParams) -> Result<()> {
        self.insert_conv(&format!("{prefix}.group_conv"), &p.group_conv)?;
        self.insert_conv(&format!("{prefix}.pointwise_mix"), &p.pointwise_mix)?;
        self.insert(format!("{prefix}.shuffle_groups"), vec![1], vec![p.shuffle_groups as f64])
    }

    pub fn drcb(&self, prefix: &str) -> Result<DrcbParams> {
        let sg = self.require(&format!("{prefix}.shuffle_groups"))?;
        let shuffle_groups = integers(&sg.values, &sg.name)?
            .first()
            .copied()
            .ok_or_else(|| Error::param("empty shuffle_groups record"))?;
        Ok(DrcbParams {
            group_conv: self.conv(&format!("{prefix}.group_conv"))?,
            pointwise_mix: self.conv(&format!("{prefix}.pointwise_mix"))?,
            shuffle_groups,
        })
    }
}

fn integers(values: &[f64], name: &str) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::param(format!("{name}: {v} is not a non-negative integer")))
            }
        })
        .collect()
}

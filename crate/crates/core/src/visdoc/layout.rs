//! Deterministic mark placement. Scales are recomputed from the data on
//! every call; nothing persists between layouts.

use serde::Serialize;
use std::collections::HashMap;

use super::color::{parse_color, ramp, Rgb, CATEGORICAL_PALETTE, DEFAULT_MARK_COLOR};
use super::{Cell, Channel, ColumnKind, EncodingDef, FieldType, Literal, ViewProp, VisSpec};

/// Edge length of unsized marks, in scene units.
pub const DEFAULT_MARK_SIZE: f64 = 0.02;
const SIZE_RANGE: (f64, f64) = (0.01, 0.1);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("channel `{channel}` is quantitative but column `{column}` holds text")]
    TextInQuantitative { channel: Channel, column: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkRecord {
    /// Centre of the mark, relative to the visualisation origin.
    pub position: [f64; 3],
    pub size: [f64; 3],
    pub color: Rgb,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub facet: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkLayout {
    pub extent: [f64; 3],
    pub marks: Vec<MarkRecord>,
}

/// One resolved positional scale.
enum Scale {
    Unencoded,
    Constant(f64),
    Linear { values: Vec<f64>, min: f64, max: f64 },
    Band { index: Vec<usize>, count: usize },
}

impl Scale {
    fn position(&self, row: usize, extent: f64) -> f64 {
        match self {
            Scale::Unencoded => 0.0,
            Scale::Constant(v) => v.clamp(0.0, extent),
            Scale::Linear { values, min, max } => {
                if max > min {
                    (values[row] - min) / (max - min) * extent
                } else {
                    0.0
                }
            }
            Scale::Band { index, count } => (index[row] as f64 + 0.5) / *count as f64 * extent,
        }
    }

    fn band_width(&self, extent: f64) -> Option<f64> {
        match self {
            Scale::Band { count, .. } => Some(extent / *count as f64),
            _ => None,
        }
    }
}

fn categories(cells: Vec<&Cell>, ordered: bool) -> (Vec<usize>, usize) {
    let mut keys: Vec<(String, Option<f64>)> = Vec::new();
    let mut seen: HashMap<String, ()> = HashMap::new();
    for c in &cells {
        let k = c.category_key();
        if seen.insert(k.clone(), ()).is_none() {
            keys.push((k, c.as_f64()));
        }
    }
    if ordered {
        keys.sort_by(|a, b| match (a.1, b.1) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            _ => a.0.cmp(&b.0),
        });
    }
    let pos: HashMap<&str, usize> = keys
        .iter()
        .enumerate()
        .map(|(i, (k, _))| (k.as_str(), i))
        .collect();
    let index = cells.iter().map(|c| pos[c.category_key().as_str()]).collect();
    (index, keys.len().max(1))
}

fn numeric_column(
    spec: &VisSpec,
    channel: Channel,
    field: &str,
) -> Result<Vec<f64>, LayoutError> {
    let idx = spec.data.column_index(field).expect("validated field");
    if spec.data.columns[idx].kind == ColumnKind::Text {
        return Err(LayoutError::TextInQuantitative {
            channel,
            column: field.to_string(),
        });
    }
    Ok(spec
        .data
        .column_values(idx)
        .map(|c| c.as_f64().unwrap_or(0.0))
        .collect())
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)))
}

fn scale_for(
    spec: &VisSpec,
    channel: Channel,
    def: Option<&EncodingDef>,
    zero_based: bool,
) -> Result<Scale, LayoutError> {
    let Some(def) = def else {
        return Ok(Scale::Unencoded);
    };
    if let Some(lit) = &def.value {
        return Ok(match lit {
            Literal::Number(v) => Scale::Constant(*v),
            _ => Scale::Unencoded,
        });
    }
    let field = def.field.as_deref().expect("validated encoding");
    match def.ty.unwrap_or(FieldType::Nominal) {
        FieldType::Quantitative => {
            let values = numeric_column(spec, channel, field)?;
            let (mut min, max) = min_max(&values);
            if zero_based {
                min = min.min(0.0);
            }
            Ok(Scale::Linear { values, min, max })
        }
        ty => {
            let idx = spec.data.column_index(field).expect("validated field");
            let (index, count) =
                categories(spec.data.column_values(idx).collect(), ty == FieldType::Ordinal);
            Ok(Scale::Band { index, count })
        }
    }
}

fn field_categories(spec: &VisSpec, channel: Channel) -> Option<(Vec<usize>, usize)> {
    let def = spec.encoding.get(&channel)?;
    let field = def.field.as_deref()?;
    let idx = spec.data.column_index(field)?;
    Some(categories(
        spec.data.column_values(idx).collect(),
        def.ty == Some(FieldType::Ordinal),
    ))
}

fn is_bar(mark: &str) -> bool {
    matches!(mark, "bar" | "cube")
}

/// Positions every data row as a mark inside `[0,width]×[0,height]×[0,depth]`.
pub fn compute_layout(spec: &VisSpec) -> Result<MarkLayout, LayoutError> {
    let extent = [
        spec.extent(ViewProp::Width),
        spec.extent(ViewProp::Height),
        spec.extent(ViewProp::Depth),
    ];
    let n = spec.data.rows.len();
    let bar = is_bar(&spec.mark);
    let axes = [Channel::X, Channel::Y, Channel::Z];
    let mut scales = Vec::with_capacity(3);
    for (i, ch) in axes.iter().enumerate() {
        // bar lengths grow from zero
        scales.push(scale_for(spec, *ch, spec.encoding.get(ch), bar && i == 1)?);
    }

    let mut marks: Vec<MarkRecord> = (0..n)
        .map(|_| MarkRecord {
            position: [0.0; 3],
            size: [DEFAULT_MARK_SIZE; 3],
            color: DEFAULT_MARK_COLOR,
            facet: None,
        })
        .collect();

    for (axis, scale) in scales.iter().enumerate() {
        for (row, mark) in marks.iter_mut().enumerate() {
            mark.position[axis] = scale.position(row, extent[axis]);
        }
        if bar {
            if let Some(w) = scale.band_width(extent[axis]) {
                marks.iter_mut().for_each(|m| m.size[axis] = w);
            }
        }
    }

    // generic size channel for non-bar marks
    if !bar {
        if let Some(def) = spec.encoding.get(&Channel::Size) {
            match (&def.value, def.ty) {
                (Some(Literal::Number(v)), _) => marks.iter_mut().for_each(|m| m.size = [*v; 3]),
                (None, Some(FieldType::Quantitative)) => {
                    let vals = numeric_column(spec, Channel::Size, def.field.as_deref().unwrap())?;
                    let (lo, hi) = min_max(&vals);
                    for (m, v) in marks.iter_mut().zip(vals) {
                        let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                        m.size = [SIZE_RANGE.0 + t * (SIZE_RANGE.1 - SIZE_RANGE.0); 3];
                    }
                }
                _ => {}
            }
        }
    }

    if let Some((index, _)) = field_categories(spec, Channel::Facetwrap) {
        for (m, f) in marks.iter_mut().zip(index) {
            m.facet = Some(f);
        }
    }

    if bar {
        layout_bars(spec, &scales, extent, &mut marks)?;
    }

    color_marks(spec, &mut marks)?;

    Ok(MarkLayout { extent, marks })
}

fn layout_bars(
    spec: &VisSpec,
    scales: &[Scale],
    extent: [f64; 3],
    marks: &mut [MarkRecord],
) -> Result<(), LayoutError> {
    // side-by-side: split the x band by the xoffset categories
    if let (Some(band), Some((sub, count))) = (
        scales[0].band_width(extent[0]),
        field_categories(spec, Channel::Xoffset),
    ) {
        let w = band / count as f64;
        for (m, j) in marks.iter_mut().zip(sub) {
            let start = m.position[0] - band / 2.0;
            m.position[0] = start + (j as f64 + 0.5) * w;
            m.size[0] = w;
        }
    }

    let Scale::Linear { values, min, max } = &scales[1] else {
        return Ok(());
    };
    let heights: Vec<f64> = values
        .iter()
        .map(|v| if max > min { (v - min) / (max - min) * extent[1] } else { 0.0 })
        .collect();

    if spec.encoding.contains_key(&Channel::Yoffset) {
        // stacked: rows sharing an x/z band pile up in row order
        let mut base: HashMap<(u64, u64, Option<usize>), f64> = HashMap::new();
        let mut stacked = vec![0.0; marks.len()];
        for (row, m) in marks.iter().enumerate() {
            let key = (m.position[0].to_bits(), m.position[2].to_bits(), m.facet);
            let b = base.entry(key).or_insert(0.0);
            stacked[row] = *b;
            *b += heights[row];
        }
        let peak = base.values().copied().fold(0.0, f64::max);
        let shrink = if peak > extent[1] && peak > 0.0 { extent[1] / peak } else { 1.0 };
        for (row, m) in marks.iter_mut().enumerate() {
            let h = heights[row] * shrink;
            m.size[1] = h;
            m.position[1] = stacked[row] * shrink + h / 2.0;
        }
    } else {
        for (m, h) in marks.iter_mut().zip(heights) {
            m.size[1] = h;
            m.position[1] = h / 2.0;
        }
    }
    Ok(())
}

fn color_marks(spec: &VisSpec, marks: &mut [MarkRecord]) -> Result<(), LayoutError> {
    let Some(def) = spec.encoding.get(&Channel::Color) else {
        return Ok(());
    };
    if let Some(lit) = &def.value {
        let rgb = match lit {
            Literal::Text(t) => parse_color(t).unwrap_or(DEFAULT_MARK_COLOR),
            Literal::Number(v) => ramp(*v),
            Literal::Bool(_) => DEFAULT_MARK_COLOR,
        };
        marks.iter_mut().for_each(|m| m.color = rgb);
        return Ok(());
    }
    let field = def.field.as_deref().expect("validated encoding");
    if def.ty == Some(FieldType::Quantitative) {
        let vals = numeric_column(spec, Channel::Color, field)?;
        let (lo, hi) = min_max(&vals);
        for (m, v) in marks.iter_mut().zip(vals) {
            m.color = ramp(if hi > lo { (v - lo) / (hi - lo) } else { 0.0 });
        }
    } else if let Some((index, _)) = field_categories(spec, Channel::Color) {
        for (m, i) in marks.iter_mut().zip(index) {
            m.color = CATEGORICAL_PALETTE[i % CATEGORICAL_PALETTE.len()];
        }
    }
    Ok(())
}

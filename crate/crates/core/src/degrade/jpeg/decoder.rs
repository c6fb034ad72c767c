use super::encoder::cos_table;
use super::tables::ZIGZAG;
use crate::error::{Error, Result};
use crate::image::ImageF;

fn codec(msg: impl Into<String>) -> Error {
    Error::Codec(msg.into())
}

#[derive(Clone, Default)]
struct HuffTable {
    // Per code length (1..=16): first code, index of first symbol, count.
    mincode: [i32; 17],
    maxcode: [i32; 17],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl HuffTable {
    fn new(bits: &[u8], values: Vec<u8>) -> Self {
        let mut t = HuffTable {
            values,
            maxcode: [-1; 17],
            ..Default::default()
        };
        let mut code = 0i32;
        let mut k = 0usize;
        for len in 1..=16 {
            let n = bits[len - 1] as usize;
            if n > 0 {
                t.valptr[len] = k;
                t.mincode[len] = code;
                code += n as i32;
                k += n;
                t.maxcode[len] = code - 1;
            }
            code <<= 1;
        }
        t
    }
}

#[derive(Clone, Copy, Default)]
struct FrameComponent {
    id: u8,
    h: usize,
    v: usize,
    tq: usize,
    td: usize,
    ta: usize,
}

/// Decoded component samples, padded to whole MCUs.
struct Plane {
    samples: Vec<i32>,
    stride: usize,
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u32,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8], pos: usize) -> Self {
        Self {
            data,
            pos,
            acc: 0,
            nbits: 0,
        }
    }

    fn fill(&mut self) {
        while self.nbits <= 24 {
            let mut byte = 0u8;
            if self.pos < self.data.len() {
                byte = self.data[self.pos];
                if byte == 0xFF {
                    let next = self.data.get(self.pos + 1).copied().unwrap_or(0);
                    if next == 0x00 {
                        self.pos += 2;
                    } else {
                        // Marker: feed zeros without consuming it.
                        byte = 0;
                    }
                } else {
                    self.pos += 1;
                }
            }
            self.acc |= u32::from(byte) << (24 - self.nbits);
            self.nbits += 8;
        }
    }

    fn bit(&mut self) -> u32 {
        if self.nbits == 0 {
            self.fill();
        }
        let b = self.acc >> 31;
        self.acc <<= 1;
        self.nbits -= 1;
        b
    }

    fn bits(&mut self, n: u8) -> u32 {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.bit();
        }
        v
    }

    fn decode(&mut self, table: &HuffTable) -> Result<u8> {
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | self.bit() as i32;
            if code <= table.maxcode[len] {
                let idx = table.valptr[len] + (code - table.mincode[len]) as usize;
                return table
                    .values
                    .get(idx)
                    .copied()
                    .ok_or_else(|| codec("bad huffman symbol"));
            }
        }
        Err(codec("invalid huffman code"))
    }

    fn receive_extend(&mut self, size: u8) -> i32 {
        if size == 0 {
            return 0;
        }
        let v = self.bits(size) as i32;
        if v < (1 << (size - 1)) {
            v - (1 << size) + 1
        } else {
            v
        }
    }

    /// Drops buffered bits and consumes an RSTn marker if one is next.
    fn restart(&mut self) {
        self.acc = 0;
        self.nbits = 0;
        while self.pos + 1 < self.data.len() {
            if self.data[self.pos] == 0xFF && (0xD0..=0xD7).contains(&self.data[self.pos + 1]) {
                self.pos += 2;
                return;
            }
            self.pos += 1;
        }
    }
}

/// Decodes a baseline (sequential, Huffman, 8-bit) JFIF stream with one or
/// three components. Chroma planes are upsampled with the triangle filter
/// used by common decoders, and output samples are 8-bit levels divided by 255.
pub fn decode_jpeg(data: &[u8]) -> Result<ImageF> {
    if data.len() < 4 || data[0] != 0xFF || data[1] != 0xD8 {
        return Err(codec("missing SOI marker"));
    }
    let mut qt = [[0u16; 64]; 4];
    let mut dc_tables: [Option<HuffTable>; 4] = Default::default();
    let mut ac_tables: [Option<HuffTable>; 4] = Default::default();
    let mut comps: Vec<FrameComponent> = Vec::new();
    let (mut height, mut width) = (0usize, 0usize);
    let mut restart_interval = 0usize;
    let mut pos = 2;
    let mut planes: Option<Vec<Plane>> = None;

    loop {
        while pos < data.len() && data[pos] != 0xFF {
            pos += 1;
        }
        while pos < data.len() && data[pos] == 0xFF {
            pos += 1;
        }
        if pos >= data.len() {
            return Err(codec("truncated stream"));
        }
        let marker = data[pos];
        pos += 1;
        if marker == 0xD9 {
            break;
        }
        if pos + 2 > data.len() {
            return Err(codec("truncated segment"));
        }
        let len = u16::from_be_bytes([data[pos], data[pos + 1]]) as usize;
        if len < 2 || pos + len > data.len() {
            return Err(codec("bad segment length"));
        }
        let seg = &data[pos + 2..pos + len];
        pos += len;
        match marker {
            0xDB => {
                let mut s = seg;
                while !s.is_empty() {
                    let (pq, tq) = (s[0] >> 4, (s[0] & 15) as usize);
                    if pq != 0 || tq > 3 || s.len() < 65 {
                        return Err(codec("unsupported quantization table"));
                    }
                    for (k, &z) in ZIGZAG.iter().enumerate() {
                        qt[tq][z as usize] = u16::from(s[1 + k]);
                    }
                    s = &s[65..];
                }
            }
            0xC4 => {
                let mut s = seg;
                while !s.is_empty() {
                    if s.len() < 17 {
                        return Err(codec("truncated huffman table"));
                    }
                    let (class, id) = (s[0] >> 4, (s[0] & 15) as usize);
                    let bits = &s[1..17];
                    let n: usize = bits.iter().map(|&b| b as usize).sum();
                    if id > 3 || s.len() < 17 + n {
                        return Err(codec("bad huffman table"));
                    }
                    let table = HuffTable::new(bits, s[17..17 + n].to_vec());
                    match class {
                        0 => dc_tables[id] = Some(table),
                        1 => ac_tables[id] = Some(table),
                        _ => return Err(codec("bad huffman class")),
                    }
                    s = &s[17 + n..];
                }
            }
            0xC0 | 0xC1 => {
                if seg.len() < 6 || seg[0] != 8 {
                    return Err(codec("only 8-bit baseline frames are supported"));
                }
                height = u16::from_be_bytes([seg[1], seg[2]]) as usize;
                width = u16::from_be_bytes([seg[3], seg[4]]) as usize;
                let n = seg[5] as usize;
                if (n != 1 && n != 3) || seg.len() < 6 + 3 * n || height == 0 || width == 0 {
                    return Err(codec("unsupported frame header"));
                }
                comps = (0..n)
                    .map(|i| {
                        let c = &seg[6 + 3 * i..9 + 3 * i];
                        FrameComponent {
                            id: c[0],
                            h: (c[1] >> 4) as usize,
                            v: (c[1] & 15) as usize,
                            tq: (c[2] & 3) as usize,
                            ..Default::default()
                        }
                    })
                    .collect();
                if comps
                    .iter()
                    .any(|c| !(1..=2).contains(&c.h) || !(1..=2).contains(&c.v))
                {
                    return Err(codec("unsupported sampling factors"));
                }
            }
            0xC2 | 0xC3 | 0xC5..=0xC7 | 0xC9..=0xCB | 0xCD..=0xCF => {
                return Err(codec("only baseline sequential JPEG is supported"));
            }
            0xDD => {
                if seg.len() < 2 {
                    return Err(codec("bad restart interval"));
                }
                restart_interval = u16::from_be_bytes([seg[0], seg[1]]) as usize;
            }
            0xDA => {
                if comps.is_empty() {
                    return Err(codec("scan before frame header"));
                }
                let ns = seg[0] as usize;
                if ns != comps.len() || seg.len() < 1 + 2 * ns + 3 {
                    return Err(codec("only single interleaved scans are supported"));
                }
                for i in 0..ns {
                    let id = seg[1 + 2 * i];
                    let sel = seg[2 + 2 * i];
                    let comp = comps
                        .iter_mut()
                        .find(|c| c.id == id)
                        .ok_or_else(|| codec("scan names unknown component"))?;
                    comp.td = (sel >> 4) as usize & 3;
                    comp.ta = (sel & 15) as usize & 3;
                }
                let (decoded, end) = decode_scan(
                    data,
                    pos,
                    &comps,
                    height,
                    width,
                    &qt,
                    &dc_tables,
                    &ac_tables,
                    restart_interval,
                )?;
                planes = Some(decoded);
                pos = end;
            }
            _ => {}
        }
    }
    let planes = planes.ok_or_else(|| codec("no scan data"))?;
    assemble(&planes, &comps, height, width)
}

#[allow(clippy::too_many_arguments)]
fn decode_scan(
    data: &[u8],
    pos: usize,
    comps: &[FrameComponent],
    height: usize,
    width: usize,
    qt: &[[u16; 64]; 4],
    dc_tables: &[Option<HuffTable>; 4],
    ac_tables: &[Option<HuffTable>; 4],
    restart_interval: usize,
) -> Result<(Vec<Plane>, usize)> {
    let hmax = comps.iter().map(|c| c.h).max().unwrap_or(1);
    let vmax = comps.iter().map(|c| c.v).max().unwrap_or(1);
    let single = comps.len() == 1;
    let (mcus_x, mcus_y) = if single {
        (width.div_ceil(8), height.div_ceil(8))
    } else {
        (width.div_ceil(8 * hmax), height.div_ceil(8 * vmax))
    };
    let cos = cos_table();
    let mut planes: Vec<Vec<i32>> = Vec::with_capacity(comps.len());
    let mut strides = Vec::with_capacity(comps.len());
    for c in comps {
        let (bw, bh) = if single {
            (mcus_x, mcus_y)
        } else {
            (mcus_x * c.h, mcus_y * c.v)
        };
        planes.push(vec![0; bw * 8 * bh * 8]);
        strides.push(bw * 8);
    }
    let mut reader = BitReader::new(data, pos);
    let mut preds = vec![0i32; comps.len()];
    let total = mcus_x * mcus_y;
    for mcu in 0..total {
        if restart_interval > 0 && mcu > 0 && mcu % restart_interval == 0 {
            reader.restart();
            preds.iter_mut().for_each(|p| *p = 0);
        }
        let (my, mx) = (mcu / mcus_x, mcu % mcus_x);
        for (ci, c) in comps.iter().enumerate() {
            let dc = dc_tables[c.td]
                .as_ref()
                .ok_or_else(|| codec("missing DC table"))?;
            let ac = ac_tables[c.ta]
                .as_ref()
                .ok_or_else(|| codec("missing AC table"))?;
            let (bh, bw) = if single { (1, 1) } else { (c.v, c.h) };
            for by in 0..bh {
                for bx in 0..bw {
                    let mut coefs = [0i32; 64];
                    let size = reader.decode(dc)?;
                    if size > 11 {
                        return Err(codec("bad DC magnitude"));
                    }
                    preds[ci] += reader.receive_extend(size);
                    coefs[0] = preds[ci];
                    let mut k = 1;
                    while k < 64 {
                        let rs = reader.decode(ac)?;
                        let (run, size) = ((rs >> 4) as usize, rs & 15);
                        if size == 0 {
                            if run == 15 {
                                k += 16;
                                continue;
                            }
                            break;
                        }
                        k += run;
                        if k > 63 {
                            return Err(codec("coefficient index overflow"));
                        }
                        coefs[ZIGZAG[k] as usize] = reader.receive_extend(size);
                        k += 1;
                    }
                    let block = idct(&coefs, &qt[c.tq], &cos);
                    let top = (my * bh + by) * 8;
                    let left = (mx * bw + bx) * 8;
                    let stride = strides[ci];
                    for r in 0..8 {
                        planes[ci][(top + r) * stride + left..(top + r) * stride + left + 8]
                            .copy_from_slice(&block[r * 8..r * 8 + 8]);
                    }
                }
            }
        }
    }
    // Resume marker scan after the entropy-coded segment.
    let mut end = reader.pos;
    while end + 1 < data.len()
        && !(data[end] == 0xFF && data[end + 1] != 0x00 && !(0xD0..=0xD7).contains(&data[end + 1]))
    {
        end += 1;
    }
    let planes = planes
        .into_iter()
        .zip(strides)
        .map(|(samples, stride)| Plane { samples, stride })
        .collect();
    Ok((planes, end))
}

fn idct(coefs: &[i32; 64], quant: &[u16; 64], cos: &[[f64; 8]; 8]) -> [i32; 64] {
    let mut deq = [0.0; 64];
    for i in 0..64 {
        deq[i] = f64::from(coefs[i]) * f64::from(quant[i]);
    }
    let mut tmp = [0.0; 64];
    for v in 0..8 {
        for x in 0..8 {
            let mut s = 0.0;
            for u in 0..8 {
                s += cos[u][x] * deq[v * 8 + u];
            }
            tmp[v * 8 + x] = s;
        }
    }
    let mut out = [0i32; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut s = 0.0;
            for v in 0..8 {
                s += cos[v][y] * tmp[v * 8 + x];
            }
            out[y * 8 + x] = ((s + 128.0).round() as i32).clamp(0, 255);
        }
    }
    out
}

/// Triangle-filter 2x upsampling along one axis with edge clamping.
fn upsample_axis(
    src: &[f64],
    rows: usize,
    cols: usize,
    horizontal: bool,
    out_len: usize,
) -> Vec<f64> {
    if horizontal {
        let mut out = vec![0.0; rows * out_len];
        for r in 0..rows {
            let row = &src[r * cols..(r + 1) * cols];
            for i in 0..out_len {
                let j = (i / 2).min(cols - 1);
                let nb = if i % 2 == 0 {
                    j.saturating_sub(1)
                } else {
                    (j + 1).min(cols - 1)
                };
                out[r * out_len + i] = 0.75 * row[j] + 0.25 * row[nb];
            }
        }
        out
    } else {
        let mut out = vec![0.0; out_len * cols];
        for i in 0..out_len {
            let j = (i / 2).min(rows - 1);
            let nb = if i % 2 == 0 {
                j.saturating_sub(1)
            } else {
                (j + 1).min(rows - 1)
            };
            for c in 0..cols {
                out[i * cols + c] = 0.75 * src[j * cols + c] + 0.25 * src[nb * cols + c];
            }
        }
        out
    }
}

fn assemble(
    planes: &[Plane],
    comps: &[FrameComponent],
    height: usize,
    width: usize,
) -> Result<ImageF> {
    let hmax = comps.iter().map(|c| c.h).max().unwrap_or(1);
    let vmax = comps.iter().map(|c| c.v).max().unwrap_or(1);
    let mut full: Vec<Vec<f64>> = Vec::with_capacity(comps.len());
    for (plane, c) in planes.iter().zip(comps) {
        let stride = plane.stride;
        let data = &plane.samples;
        let rows = data.len() / stride;
        let (fx, fy) = if comps.len() == 1 {
            (1, 1)
        } else {
            (hmax / c.h, vmax / c.v)
        };
        // Component extent actually covering the image.
        let cw = (width * c.h).div_ceil(hmax).min(stride);
        let ch = (height * c.v).div_ceil(vmax).min(rows);
        let (cw, ch) = if comps.len() == 1 {
            (width, height)
        } else {
            (cw, ch)
        };
        let mut p = vec![0.0; ch * cw];
        for r in 0..ch {
            for col in 0..cw {
                p[r * cw + col] = f64::from(data[r * stride + col]);
            }
        }
        let (mut pw, mut prow) = (cw, ch);
        if fx == 2 {
            p = upsample_axis(&p, prow, pw, true, width);
            pw = width;
        }
        if fy == 2 {
            p = upsample_axis(&p, prow, pw, false, height);
            prow = height;
        }
        // Crop to the image size (planes may extend into MCU padding).
        let mut cropped = vec![0.0; height * width];
        for r in 0..height {
            for col in 0..width {
                cropped[r * width + col] = p[r.min(prow - 1) * pw + col.min(pw - 1)];
            }
        }
        full.push(cropped);
    }
    let to_unit = |v: f64| (v.round().clamp(0.0, 255.0)) / 255.0;
    let mut out = ImageF::new(height, width, 3);
    let data = out.data_mut();
    if full.len() == 1 {
        for (i, &y) in full[0].iter().enumerate() {
            let v = to_unit(y);
            data[3 * i..3 * i + 3].copy_from_slice(&[v, v, v]);
        }
    } else {
        for i in 0..height * width {
            let (y, cb, cr) = (full[0][i], full[1][i] - 128.0, full[2][i] - 128.0);
            data[3 * i] = to_unit(y + 1.402 * cr);
            data[3 * i + 1] =
                to_unit(y - 0.344_136_286_201_022_1 * cb - 0.714_136_286_201_022_1 * cr);
            data[3 * i + 2] = to_unit(y + 1.772 * cb);
        }
    }
    Ok(out)
}

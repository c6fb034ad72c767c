use std::f64::consts::PI;

use super::tables::*;
use crate::error::{Error, Result};
use crate::image::ImageF;

/// IJG percentage scaling for a quality factor in `1..=100`.
pub fn quality_scale(quality: u8) -> u32 {
    let q = u32::from(quality.clamp(1, 100));
    if q < 50 {
        5000 / q
    } else {
        200 - 2 * q
    }
}

/// Scales an Annex K base table (natural order) for `quality`.
pub fn scaled_table(base: &[u8; 64], quality: u8) -> [u8; 64] {
    let scale = quality_scale(quality);
    let mut out = [0u8; 64];
    for (o, &b) in out.iter_mut().zip(base) {
        *o = ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as u8;
    }
    out
}

/// Luma and chroma quantization tables in natural order.
pub fn quant_tables(quality: u8) -> [[u8; 64]; 2] {
    [
        scaled_table(&LUMA_QUANT, quality),
        scaled_table(&CHROMA_QUANT, quality),
    ]
}

pub(crate) fn cos_table() -> [[f64; 8]; 8] {
    let mut t = [[0.0; 8]; 8];
    for (u, row) in t.iter_mut().enumerate() {
        let cu = if u == 0 { 1.0 / 2f64.sqrt() } else { 1.0 };
        for (x, v) in row.iter_mut().enumerate() {
            *v = 0.5 * cu * (((2 * x + 1) as f64) * u as f64 * PI / 16.0).cos();
        }
    }
    t
}

/// Canonical Huffman code table indexed by symbol: `(code, length)`.
pub(crate) fn huffman_codes(bits: &[u8; 16], values: &[u8]) -> [(u16, u8); 256] {
    let mut table = [(0u16, 0u8); 256];
    let mut code = 0u16;
    let mut k = 0;
    for (len_minus_1, &count) in bits.iter().enumerate() {
        for _ in 0..count {
            table[values[k] as usize] = (code, len_minus_1 as u8 + 1);
            code += 1;
            k += 1;
        }
        code <<= 1;
    }
    table
}

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        Self {
            out,
            acc: 0,
            nbits: 0,
        }
    }

    fn put(&mut self, code: u16, len: u8) {
        debug_assert!(len <= 16);
        self.acc = (self.acc << len) | u32::from(code) & ((1u32 << len) - 1);
        self.nbits += u32::from(len);
        while self.nbits >= 8 {
            let byte = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(byte);
            if byte == 0xFF {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
        self.acc &= (1u32 << self.nbits) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits as u8;
            self.put((1u16 << pad) - 1, pad);
        }
        self.out
    }
}

fn magnitude(v: i32) -> (u8, u16) {
    let abs = v.unsigned_abs();
    let size = (32 - abs.leading_zeros()) as u8;
    let bits = if v < 0 { (v - 1) as u32 } else { v as u32 };
    (size, (bits & ((1u32 << size) - 1)) as u16)
}

struct Component<'a> {
    dc: &'a [(u16, u8); 256],
    ac: &'a [(u16, u8); 256],
    quant: &'a [u8; 64],
    pred: i32,
}

struct BlockCoder {
    cos: [[f64; 8]; 8],
}

impl BlockCoder {
    /// Level-shifted forward DCT and quantization; returns natural order.
    fn transform(&self, block: &[f64; 64], quant: &[u8; 64]) -> [i32; 64] {
        let mut tmp = [0.0; 64];
        for y in 0..8 {
            for u in 0..8 {
                let mut s = 0.0;
                for x in 0..8 {
                    s += self.cos[u][x] * (block[y * 8 + x] - 128.0);
                }
                tmp[y * 8 + u] = s;
            }
        }
        let mut out = [0i32; 64];
        for v in 0..8 {
            for u in 0..8 {
                let mut s = 0.0;
                for y in 0..8 {
                    s += self.cos[v][y] * tmp[y * 8 + u];
                }
                let q = (s / f64::from(quant[v * 8 + u])).round();
                out[v * 8 + u] = (q as i32).clamp(-2047, 2047);
            }
        }
        out
    }

    fn encode(&self, w: &mut BitWriter, block: &[f64; 64], comp: &mut Component<'_>) {
        let coefs = self.transform(block, comp.quant);
        let diff = coefs[0] - comp.pred;
        comp.pred = coefs[0];
        let (size, bits) = magnitude(diff);
        let (code, len) = comp.dc[size as usize];
        w.put(code, len);
        if size > 0 {
            w.put(bits, size);
        }
        let mut run = 0u8;
        for &k in &ZIGZAG[1..] {
            let v = coefs[k as usize];
            if v == 0 {
                run += 1;
                continue;
            }
            while run >= 16 {
                let (code, len) = comp.ac[0xF0];
                w.put(code, len);
                run -= 16;
            }
            let (size, bits) = magnitude(v);
            let (code, len) = comp.ac[((run << 4) | size) as usize];
            w.put(code, len);
            w.put(bits, size);
            run = 0;
        }
        if run > 0 {
            let (code, len) = comp.ac[0x00];
            w.put(code, len);
        }
    }
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn write_headers(out: &mut Vec<u8>, height: u16, width: u16, quality: u8) {
    out.extend_from_slice(&[0xFF, 0xD8]);
    segment(
        out,
        0xE0,
        &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0],
    );

    let mut dqt = Vec::with_capacity(130);
    for (id, table) in quant_tables(quality).iter().enumerate() {
        dqt.push(id as u8);
        dqt.extend(ZIGZAG.iter().map(|&k| table[k as usize]));
    }
    segment(out, 0xDB, &dqt);

    let [h1, h0] = height.to_be_bytes();
    let [w1, w0] = width.to_be_bytes();
    segment(
        out,
        0xC0,
        &[8, h1, h0, w1, w0, 3, 1, 0x22, 0, 2, 0x11, 1, 3, 0x11, 1],
    );

    let mut dht = Vec::new();
    for (class_id, bits, values) in [
        (0x00u8, &DC_LUMA_BITS, &DC_LUMA_VALUES[..]),
        (0x10, &AC_LUMA_BITS, &AC_LUMA_VALUES[..]),
        (0x01, &DC_CHROMA_BITS, &DC_CHROMA_VALUES[..]),
        (0x11, &AC_CHROMA_BITS, &AC_CHROMA_VALUES[..]),
    ] {
        dht.push(class_id);
        dht.extend_from_slice(bits);
        dht.extend_from_slice(values);
    }
    segment(out, 0xC4, &dht);
    segment(out, 0xDA, &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0]);
}

/// Edge-replicated plane of size `ph x pw` built from `src` (`h x w`).
fn padded(src: &[f64], h: usize, w: usize, ph: usize, pw: usize) -> Vec<f64> {
    let mut out = vec![0.0; ph * pw];
    for r in 0..ph {
        let sr = r.min(h - 1);
        for c in 0..pw {
            out[r * pw + c] = src[sr * w + c.min(w - 1)];
        }
    }
    out
}

/// Encodes a baseline JFIF stream: 8-bit samples (`round(v * 255)`), JFIF
/// YCbCr, 4:2:0 chroma by 2x2 averaging, IJG-scaled Annex K tables, and
/// the standard Huffman tables. Single-channel images are encoded as gray RGB.
pub fn encode_jpeg(img: &ImageF, quality: u8) -> Result<Vec<u8>> {
    if img.is_empty() {
        return Err(Error::Codec("cannot encode an empty image".into()));
    }
    if !(1..=100).contains(&quality) {
        return Err(Error::Codec(format!("quality {quality} outside 1..=100")));
    }
    let (h, w) = img.dims();
    let (height, width) = match (u16::try_from(h), u16::try_from(w)) {
        (Ok(a), Ok(b)) => (a, b),
        _ => {
            return Err(Error::Codec(format!(
                "{h}x{w} exceeds baseline JPEG limits"
            )))
        }
    };
    let rgb = img.to_rgb();
    let px = rgb.to_u8();

    let n = h * w;
    let (mut y, mut cb, mut cr) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (i, p) in px.chunks_exact(3).enumerate() {
        let (r, g, b) = (f64::from(p[0]), f64::from(p[1]), f64::from(p[2]));
        y[i] = 0.299 * r + 0.587 * g + 0.114 * b;
        cb[i] = -0.168_735_891_647_856_1 * r - 0.331_264_108_352_143_9 * g + 0.5 * b + 128.0;
        cr[i] = 0.5 * r - 0.418_687_589_158_589_6 * g - 0.081_312_410_841_410_4 * b + 128.0;
    }

    let (ph, pw) = (h.div_ceil(16) * 16, w.div_ceil(16) * 16);
    let y = padded(&y, h, w, ph, pw);
    let subsample = |plane: &[f64]| -> Vec<f64> {
        let full = padded(plane, h, w, ph, pw);
        let (ch, cw) = (ph / 2, pw / 2);
        let mut out = vec![0.0; ch * cw];
        for r in 0..ch {
            for c in 0..cw {
                let i = 2 * r * pw + 2 * c;
                out[r * cw + c] = 0.25 * (full[i] + full[i + 1] + full[i + pw] + full[i + pw + 1]);
            }
        }
        out
    };
    let (cb, cr) = (subsample(&cb), subsample(&cr));

    let [luma_q, chroma_q] = quant_tables(quality);
    let dc_l = huffman_codes(&DC_LUMA_BITS, &DC_LUMA_VALUES);
    let ac_l = huffman_codes(&AC_LUMA_BITS, &AC_LUMA_VALUES);
    let dc_c = huffman_codes(&DC_CHROMA_BITS, &DC_CHROMA_VALUES);
    let ac_c = huffman_codes(&AC_CHROMA_BITS, &AC_CHROMA_VALUES);
    let mut comps = [
        Component {
            dc: &dc_l,
            ac: &ac_l,
            quant: &luma_q,
            pred: 0,
        },
        Component {
            dc: &dc_c,
            ac: &ac_c,
            quant: &chroma_q,
            pred: 0,
        },
        Component {
            dc: &dc_c,
            ac: &ac_c,
            quant: &chroma_q,
            pred: 0,
        },
    ];

    let mut out = Vec::with_capacity(n / 2 + 1024);
    write_headers(&mut out, height, width, quality);
    let mut writer = BitWriter::new(out);
    let coder = BlockCoder { cos: cos_table() };
    let load = |plane: &[f64], stride: usize, top: usize, left: usize| -> [f64; 64] {
        let mut b = [0.0; 64];
        for r in 0..8 {
            b[r * 8..r * 8 + 8]
                .copy_from_slice(&plane[(top + r) * stride + left..(top + r) * stride + left + 8]);
        }
        b
    };
    let cw = pw / 2;
    for my in 0..ph / 16 {
        for mx in 0..pw / 16 {
            for (dy, dx) in [(0, 0), (0, 8), (8, 0), (8, 8)] {
                let block = load(&y, pw, my * 16 + dy, mx * 16 + dx);
                coder.encode(&mut writer, &block, &mut comps[0]);
            }
            let block = load(&cb, cw, my * 8, mx * 8);
            coder.encode(&mut writer, &block, &mut comps[1]);
            let block = load(&cr, cw, my * 8, mx * 8);
            coder.encode(&mut writer, &block, &mut comps[2]);
        }
    }
    let mut out = writer.finish();
    out.extend_from_slice(&[0xFF, 0xD9]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quality_fifty_keeps_base_tables() {
        assert_eq!(quality_scale(50), 100);
        assert_eq!(scaled_table(&LUMA_QUANT, 50), LUMA_QUANT);
        assert_eq!(scaled_table(&CHROMA_QUANT, 50), CHROMA_QUANT);
    }

    #[test]
    fn scaling_formula_points() {
        assert_eq!(quality_scale(30), 166);
        assert_eq!(quality_scale(95), 10);
        assert_eq!(quality_scale(1), 5000);
        // 16 * 166 = 2656 -> (2656 + 50) / 100 = 27
        assert_eq!(scaled_table(&LUMA_QUANT, 30)[0], 27);
        assert_eq!(scaled_table(&LUMA_QUANT, 100), [1; 64]);
        assert_eq!(scaled_table(&CHROMA_QUANT, 1)[63], 255);
    }

    #[test]
    fn magnitude_categories() {
        assert_eq!(magnitude(0), (0, 0));
        assert_eq!(magnitude(1), (1, 1));
        assert_eq!(magnitude(-1), (1, 0));
        assert_eq!(magnitude(-3), (2, 0));
        assert_eq!(magnitude(5), (3, 5));
        assert_eq!(magnitude(-2047), (11, 0));
    }

    #[test]
    fn canonical_codes_are_prefix_free() {
        let codes = huffman_codes(&AC_LUMA_BITS, &AC_LUMA_VALUES);
        let used: Vec<_> = AC_LUMA_VALUES.iter().map(|&v| codes[v as usize]).collect();
        for (i, &(a, la)) in used.iter().enumerate() {
            for &(b, lb) in &used[i + 1..] {
                let l = la.min(lb);
                assert_ne!(a >> (la - l), b >> (lb - l));
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(encode_jpeg(&ImageF::new(0, 4, 3), 50).is_err());
        assert!(encode_jpeg(&ImageF::new(4, 4, 3), 0).is_err());
        assert!(encode_jpeg(&ImageF::new(4, 4, 3), 101).is_err());
    }
}

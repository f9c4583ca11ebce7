//! Private lossless compression of Y for a receiver that shares a key with
//! the sender but must learn nothing about X from the channel.
//!
//! The codeword is `(index(x) XOR w) ‖ code(u)`: the first part is a one-time
//! pad on the index of x, the second a Huffman code for the FRL variable u,
//! which is independent of X. The receiver unpads x and outputs y = f(u, x).

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frl::frl_construct;
use crate::probcore::io::{distribution_from_json, distribution_to_json, mechanism_from_value, mechanism_to_value};
use crate::probcore::measures::entropy_of_masses;
use crate::probcore::{induce, JointDistribution, Mechanism};
use crate::rng::rng_for;

#[derive(Debug, Clone)]
pub struct TwoPartCode {
    pub frl_mechanism: Mechanism,
    /// Codeword of each letter of U, as '0'/'1' characters.
    pub codewords: Vec<String>,
    /// ⌈log₂|X|⌉.
    pub pad_width: usize,
    pub p_u: Vec<f64>,
    pub seed: u64,
    /// |X| is not a power of two, so some pad patterns name no x.
    pub padded_index_space: bool,
    nx: usize,
}

#[derive(PartialEq)]
struct Weight(f64);

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Binary Huffman code; ties are broken by creation order so the result is
/// deterministic.
pub fn huffman(p: &[f64]) -> Vec<String> {
    let n = p.len();
    if n <= 1 {
        return vec![String::new(); n];
    }
    let mut heap = BinaryHeap::new();
    // children[node] for internal nodes, numbered from n
    let mut children: Vec<(usize, usize)> = Vec::new();
    for (i, &w) in p.iter().enumerate() {
        heap.push(Reverse((Weight(w), i)));
    }
    while heap.len() > 1 {
        let Reverse((Weight(a), i)) = heap.pop().expect("two nodes");
        let Reverse((Weight(b), k)) = heap.pop().expect("two nodes");
        children.push((i, k));
        heap.push(Reverse((Weight(a + b), n + children.len() - 1)));
    }
    let mut codes = vec![String::new(); n];
    let mut stack = vec![(n + children.len() - 1, String::new())];
    while let Some((node, prefix)) = stack.pop() {
        if node < n {
            codes[node] = prefix;
        } else {
            let (l, r) = children[node - n];
            stack.push((l, format!("{prefix}0")));
            stack.push((r, format!("{prefix}1")));
        }
    }
    codes
}

fn pad_width(nx: usize) -> usize {
    (usize::BITS - nx.saturating_sub(1).leading_zeros()) as usize
}

pub fn build_code(j: &JointDistribution, seed: u64) -> Result<TwoPartCode> {
    let frl = frl_construct(j);
    let ij = induce(j, &frl.mechanism)?;
    let p_u = ij.pu();
    let codewords = huffman(&p_u);
    Ok(TwoPartCode {
        frl_mechanism: frl.mechanism,
        codewords,
        pad_width: pad_width(j.nx()),
        p_u,
        seed,
        padded_index_space: !j.nx().is_power_of_two(),
        nx: j.nx(),
    })
}

fn to_bits(v: usize, width: usize) -> String {
    (0..width).rev().map(|b| if (v >> b) & 1 == 1 { '1' } else { '0' }).collect()
}

impl TwoPartCode {
    pub fn key_space(&self) -> usize {
        1 << self.pad_width
    }

    /// Codeword for a given letter u, skipping the sampling step.
    pub fn encode_with(&self, x: usize, u: usize, w: usize) -> Result<String> {
        if x >= self.nx || u >= self.codewords.len() {
            return Err(Error::Usage("symbol outside the code's alphabets".into()));
        }
        if w >= self.key_space() {
            return Err(Error::Usage(format!("key {w} outside {{0,1}}^{}", self.pad_width)));
        }
        Ok(format!("{}{}", to_bits(x ^ w, self.pad_width), self.codewords[u]))
    }

    /// Samples u from q(· | x, y) with a seed derived from (x, y, nonce) and
    /// returns the bitstring.
    pub fn encode(&self, j: &JointDistribution, x: usize, y: usize, w: usize, nonce: u64) -> Result<String> {
        if x >= j.nx() || y >= j.ny() || j.p(x, y) <= 0.0 {
            return Err(Error::Usage("(x, y) is not in the support".into()));
        }
        let mut rng = rng_for(self.seed, &format!("privcomp/{x}/{y}/{nonce}"));
        let t: f64 = rng.random();
        let slice = self.frl_mechanism.slice(x, y);
        let mut acc = 0.0;
        let mut u = slice.iter().rposition(|&q| q > 0.0).unwrap_or(0);
        for (k, &q) in slice.iter().enumerate() {
            acc += q;
            if q > 0.0 && t < acc {
                u = k;
                break;
            }
        }
        self.encode_with(x, u, w)
    }

    /// Recovers (x, u) from a bitstring; trailing bits must be zeros shorter
    /// than a byte (hex padding).
    pub fn parse(&self, bits: &str, w: usize) -> Result<(usize, usize)> {
        if w >= self.key_space() {
            return Err(Error::Decode(format!("key {w} outside {{0,1}}^{}", self.pad_width)));
        }
        if bits.len() < self.pad_width || bits.chars().any(|c| c != '0' && c != '1') {
            return Err(Error::Decode("codeword shorter than the pad or not binary".into()));
        }
        let pad = usize::from_str_radix(&bits[..self.pad_width], 2).unwrap_or(0);
        let x = if self.pad_width == 0 { 0 } else { pad ^ w };
        if x >= self.nx {
            return Err(Error::Decode(format!(
                "pad decodes to index {x}, which names no x (|X| = {})",
                self.nx
            )));
        }
        let rest = &bits[self.pad_width..];
        let u = self
            .codewords
            .iter()
            .position(|c| rest.starts_with(c.as_str()) && rest[c.len()..].len() < 8 && rest[c.len()..].chars().all(|b| b == '0'))
            .ok_or_else(|| Error::Decode("no codeword matches the message body".into()))?;
        Ok((x, u))
    }

    pub fn decode(&self, bits: &str, w: usize) -> Result<usize> {
        let (x, u) = self.parse(bits, w)?;
        self.frl_mechanism
            .reconstruct(u, x)
            .ok_or_else(|| Error::Decode("mechanism has no reconstruction table".into()))
    }

    pub fn expected_codeword_length(&self) -> f64 {
        self.p_u.iter().zip(&self.codewords).map(|(p, c)| p * c.len() as f64).sum()
    }

    pub fn kraft_sum(&self) -> f64 {
        self.codewords.iter().map(|c| 0.5f64.powi(c.len() as i32)).sum()
    }

    pub fn is_prefix_free(&self) -> bool {
        self.codewords.iter().enumerate().all(|(a, ca)| {
            self.codewords
                .iter()
                .enumerate()
                .all(|(b, cb)| a == b || !cb.starts_with(ca.as_str()))
        })
    }

    /// Checks decode(encode) = y over support × keys × positive-probability u;
    /// returns the number of cases checked.
    pub fn verify_roundtrip(&self, j: &JointDistribution) -> Result<usize> {
        let mut n = 0;
        for x in 0..j.nx() {
            for y in 0..j.ny() {
                if j.p(x, y) <= 0.0 {
                    continue;
                }
                for (u, &q) in self.frl_mechanism.slice(x, y).iter().enumerate() {
                    if q <= 0.0 {
                        continue;
                    }
                    for w in 0..self.key_space() {
                        let c = self.encode_with(x, u, w)?;
                        let got = self.decode(&c, w)?;
                        if got != y {
                            return Err(Error::Consistency(format!(
                                "decoded y = {got} for (x, y, u, w) = ({x}, {y}, {u}, {w})"
                            )));
                        }
                        n += 1;
                    }
                }
            }
        }
        Ok(n)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeAnalysis {
    pub expected_length_bits: f64,
    pub expected_codeword_length: f64,
    pub h_u: f64,
    /// I(X; C), exact.
    pub leakage_i_xc_bits: f64,
    pub kraft_sum: f64,
    /// expected length ≤ log₂|X| + H(U) + 1.
    pub bound_check: bool,
    pub notes: Vec<String>,
}

/// Enumerates the law of (X, C) over (y, u, w) and measures it exactly.
pub fn analyze(code: &TwoPartCode, j: &JointDistribution) -> Result<CodeAnalysis> {
    let mut joint: BTreeMap<(usize, String), f64> = BTreeMap::new();
    let kw = code.key_space() as f64;
    for x in 0..j.nx() {
        for y in 0..j.ny() {
            let pxy = j.p(x, y);
            if pxy <= 0.0 {
                continue;
            }
            for (u, &q) in code.frl_mechanism.slice(x, y).iter().enumerate() {
                if q <= 0.0 {
                    continue;
                }
                for w in 0..code.key_space() {
                    *joint.entry((x, code.encode_with(x, u, w)?)).or_insert(0.0) += pxy * q / kw;
                }
            }
        }
    }
    let mut pc: BTreeMap<&str, f64> = BTreeMap::new();
    for ((_, c), m) in &joint {
        *pc.entry(c.as_str()).or_insert(0.0) += m;
    }
    let px = j.px();
    let masses: Vec<f64> = joint.values().copied().collect();
    let pcs: Vec<f64> = pc.values().copied().collect();
    let leakage = (entropy_of_masses(&px) + entropy_of_masses(&pcs) - entropy_of_masses(&masses)).max(0.0);
    let h_u = entropy_of_masses(&code.p_u);
    let el = code.expected_codeword_length();
    let expected = code.pad_width as f64 + el;
    let mut notes = Vec::new();
    if code.padded_index_space {
        notes.push(format!(
            "|X| = {} is not a power of two: the pad spends {} bits where log₂|X| = {:.6}",
            j.nx(),
            code.pad_width,
            (j.nx() as f64).log2()
        ));
    }
    Ok(CodeAnalysis {
        expected_length_bits: expected,
        expected_codeword_length: el,
        h_u,
        leakage_i_xc_bits: leakage,
        kraft_sum: code.kraft_sum(),
        bound_check: expected <= (j.nx() as f64).log2() + h_u + 1.0 + 1e-9,
        notes,
    })
}

#[derive(Serialize, Deserialize)]
struct CodebookFile {
    pad_width: usize,
    seed: u64,
    codewords: BTreeMap<String, String>,
    distribution: serde_json::Value,
    mechanism: serde_json::Value,
}

/// Self-contained codebook: the distribution, the FRL mechanism and the
/// codeword table.
pub fn codebook_to_json(code: &TwoPartCode, j: &JointDistribution) -> String {
    let file = CodebookFile {
        pad_width: code.pad_width,
        seed: code.seed,
        codewords: code
            .frl_mechanism
            .u_alphabet()
            .labels()
            .iter()
            .cloned()
            .zip(code.codewords.iter().cloned())
            .collect(),
        distribution: serde_json::from_str(&distribution_to_json(j)).expect("valid json"),
        mechanism: mechanism_to_value(&code.frl_mechanism, j),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

pub fn codebook_from_json(s: &str) -> Result<(TwoPartCode, JointDistribution)> {
    let f: CodebookFile = serde_json::from_str(s)?;
    let j = distribution_from_json(&f.distribution.to_string())?;
    let m = mechanism_from_value(f.mechanism, &j)?;
    if m.reconstruction().is_none() {
        return Err(Error::Validation("codebook mechanism lacks a reconstruction table".into()));
    }
    let codewords = m
        .u_alphabet()
        .labels()
        .iter()
        .map(|l| {
            f.codewords
                .get(l)
                .cloned()
                .ok_or_else(|| Error::Validation(format!("no codeword for letter {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if f.pad_width != pad_width(j.nx()) {
        return Err(Error::Validation("pad width does not match |X|".into()));
    }
    let p_u = induce(&j, &m)?.pu();
    let code = TwoPartCode {
        frl_mechanism: m,
        codewords,
        pad_width: f.pad_width,
        p_u,
        seed: f.seed,
        padded_index_space: !j.nx().is_power_of_two(),
        nx: j.nx(),
    };
    if !code.is_prefix_free() {
        return Err(Error::Validation("codewords are not prefix-free".into()));
    }
    Ok((code, j))
}

/// Packs a bitstring into hex, zero-padding the last byte.
pub fn bits_to_hex(bits: &str) -> String {
    let mut padded = bits.to_string();
    while padded.len() % 8 != 0 {
        padded.push('0');
    }
    padded
        .as_bytes()
        .chunks(8)
        .map(|c| {
            let s = std::str::from_utf8(c).expect("ascii");
            format!("{:02x}", u8::from_str_radix(s, 2).expect("binary"))
        })
        .collect()
}

pub fn hex_to_bits(hex: &str) -> Result<String> {
    let hex = hex.trim();
    if hex.len() % 2 != 0 || !hex.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(Error::Decode(format!("{hex:?} is not a whole number of hex bytes")));
    }
    Ok(hex
        .as_bytes()
        .chunks(2)
        .map(|c| {
            let b = u8::from_str_radix(std::str::from_utf8(c).expect("ascii"), 16).expect("hex");
            format!("{b:08b}")
        })
        .collect())
}

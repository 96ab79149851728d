//! Text file formats.
//!
//! All formats ignore blank lines and everything after `#`.
//!
//! Sequence files start with `alphabet <size>` followed by the symbols as
//! whitespace-separated integers. With at most ten symbols, runs of digits
//! such as `0000110110` are also accepted.
//!
//! Channel files start with `channel <inputs> <outputs>` followed by one row
//! of transition probabilities per input. The one-line shorthands
//! `bsc <p>` and `identity <size>` are accepted too.
//!
//! Machine files start with `encoder` or `decoder`, then `key value` lines
//! (`k`, `m`, `states`, `source`, `channel`, optional `side` and `initial`),
//! then `rows`, then one line per table row:
//!
//! ```text
//! <state> <u-block>[|<w-block>] -> <next> : <x-block>=<p> ; <x-block>=<p>   (encoder)
//! <state> <y-block>[|<w-block>] -> <next> : <u-block>                      (decoder)
//! ```
//!
//! A block is a digit string for alphabets of at most ten symbols, or
//! comma-separated integers otherwise.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channels::TransitionMatrix;
use crate::error::{Error, Result};
use crate::fsm::{DecoderShape, DecoderSpec, EncoderShape, EncoderSpec};
use crate::parsing::{block_from_index, block_index, Alphabet, SymbolSequence};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Non-empty lines with comments stripped, as `(line number, text)`.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

struct Ctx<'a> {
    path: &'a Path,
}

impl Ctx<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> Error {
        Error::Format { path: self.path.display().to_string(), line, msg: msg.into() }
    }

    fn num<T: std::str::FromStr>(&self, line: usize, tok: &str) -> Result<T> {
        tok.parse().map_err(|_| self.err(line, format!("cannot parse `{tok}`")))
    }
}

pub fn read_sequence(path: &Path) -> Result<SymbolSequence> {
    parse_sequence(&read(path)?, path)
}

pub fn parse_sequence(text: &str, path: &Path) -> Result<SymbolSequence> {
    let ctx = Ctx { path };
    let mut it = lines(text);
    let (line, header) = it.next().ok_or_else(|| ctx.err(0, "empty file"))?;
    let size = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["alphabet", size] => ctx.num::<usize>(line, size)?,
        _ => return Err(ctx.err(line, "expected `alphabet <size>`")),
    };
    let alphabet = Alphabet::new(size).map_err(|e| ctx.err(line, e.to_string()))?;
    let mut data = Vec::new();
    for (line, l) in it {
        for tok in l.split_whitespace() {
            if size <= 10 && tok.len() > 1 && tok.bytes().all(|b| b.is_ascii_digit()) {
                data.extend(tok.bytes().map(|b| (b - b'0') as u32));
            } else {
                data.push(ctx.num::<u32>(line, tok)?);
            }
        }
    }
    SymbolSequence::new(alphabet, data).map_err(|e| ctx.err(0, e.to_string()))
}

pub fn format_sequence(u: &SymbolSequence) -> String {
    let mut out = format!("alphabet {}\n", u.alphabet().size());
    for chunk in u.symbols().chunks(32) {
        let row: Vec<String> = chunk.iter().map(|s| s.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_sequence(path: &Path, u: &SymbolSequence) -> Result<()> {
    write(path, &format_sequence(u))
}

pub fn read_channel(path: &Path) -> Result<TransitionMatrix> {
    parse_channel(&read(path)?, path)
}

pub fn parse_channel(text: &str, path: &Path) -> Result<TransitionMatrix> {
    let ctx = Ctx { path };
    let mut it = lines(text);
    let (line, header) = it.next().ok_or_else(|| ctx.err(0, "empty file"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    let (inputs, outputs) = match toks[..] {
        ["bsc", p] => {
            let p: f64 = ctx.num(line, p)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(ctx.err(line, format!("crossover {p} outside [0, 1]")));
            }
            return Ok(TransitionMatrix::bsc(p));
        }
        ["identity", n] => {
            let n: usize = ctx.num(line, n)?;
            if n == 0 {
                return Err(ctx.err(line, "empty alphabet"));
            }
            return Ok(TransitionMatrix::identity(n));
        }
        ["channel", i, o] => (ctx.num::<usize>(line, i)?, ctx.num::<usize>(line, o)?),
        _ => return Err(ctx.err(line, "expected `channel <inputs> <outputs>`, `bsc <p>` or `identity <n>`")),
    };
    let mut data = Vec::with_capacity(inputs * outputs);
    let mut rows = 0;
    for (line, l) in it {
        let row: Vec<f64> = l.split_whitespace().map(|t| ctx.num(line, t)).collect::<Result<_>>()?;
        if row.len() != outputs {
            return Err(ctx.err(line, format!("row has {} entries, expected {outputs}", row.len())));
        }
        rows += 1;
        if rows > inputs {
            return Err(ctx.err(line, format!("more than {inputs} rows")));
        }
        data.extend(row);
    }
    if rows != inputs {
        return Err(ctx.err(0, format!("found {rows} rows, expected {inputs}")));
    }
    TransitionMatrix::from_flat(inputs, outputs, data).map_err(|e| ctx.err(0, e.to_string()))
}

/// Shortest round-trip decimal form of a probability.
fn fmt_prob(p: f64) -> String {
    format!("{p}")
}

pub fn format_channel(ch: &TransitionMatrix) -> String {
    let mut out = format!("channel {} {}\n", ch.inputs(), ch.outputs());
    for row in ch.rows() {
        let cells: Vec<String> = row.iter().map(|&p| fmt_prob(p)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_channel(path: &Path, ch: &TransitionMatrix) -> Result<()> {
    write(path, &format_channel(ch))
}

fn parse_block(ctx: &Ctx, line: usize, tok: &str, radix: usize, len: usize) -> Result<Vec<u32>> {
    let symbols: Vec<u32> = if tok.contains(',') || radix > 10 {
        tok.split(',').map(|t| ctx.num(line, t.trim())).collect::<Result<_>>()?
    } else {
        tok.bytes()
            .map(|b| if b.is_ascii_digit() { Ok((b - b'0') as u32) } else { Err(ctx.err(line, format!("bad block `{tok}`"))) })
            .collect::<Result<_>>()?
    };
    if symbols.len() != len || symbols.iter().any(|&s| s as usize >= radix) {
        return Err(ctx.err(line, format!("`{tok}` is not a block of {len} symbols below {radix}")));
    }
    Ok(symbols)
}

fn fmt_block(block: &[u32], radix: usize) -> String {
    if radix <= 10 {
        block.iter().map(|&s| char::from(b'0' + s as u8)).collect()
    } else {
        block.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    }
}

struct MachineHeader {
    kind: String,
    keys: HashMap<String, usize>,
    rows_line: usize,
}

fn machine_header<'a>(ctx: &Ctx, it: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<MachineHeader> {
    let (line, kind) = it.next().ok_or_else(|| ctx.err(0, "empty file"))?;
    if kind != "encoder" && kind != "decoder" {
        return Err(ctx.err(line, "expected `encoder` or `decoder`"));
    }
    let mut keys = HashMap::new();
    for (line, l) in it.by_ref() {
        if l == "rows" {
            return Ok(MachineHeader { kind: kind.to_string(), keys, rows_line: line });
        }
        match l.split_whitespace().collect::<Vec<_>>()[..] {
            [key, value] => {
                if !["k", "m", "states", "source", "channel", "side", "initial"].contains(&key) {
                    return Err(ctx.err(line, format!("unknown key `{key}`")));
                }
                keys.insert(key.to_string(), ctx.num(line, value)?);
            }
            _ => return Err(ctx.err(line, "expected `key value` or `rows`")),
        }
    }
    Err(ctx.err(0, "missing `rows` section"))
}

impl MachineHeader {
    fn get(&self, ctx: &Ctx, key: &str) -> Result<usize> {
        self.keys.get(key).copied().ok_or_else(|| ctx.err(self.rows_line, format!("missing `{key}`")))
    }
}

/// Splits `<state> <block>[|<side>] -> <next> : <rest>`.
fn split_row<'a>(ctx: &Ctx, line: usize, l: &'a str) -> Result<(usize, &'a str, Option<&'a str>, usize, &'a str)> {
    let (lhs, rest) = l.split_once("->").ok_or_else(|| ctx.err(line, "missing `->`"))?;
    let (next, body) = rest.split_once(':').ok_or_else(|| ctx.err(line, "missing `:`"))?;
    let mut lt = lhs.split_whitespace();
    let state = ctx.num(line, lt.next().ok_or_else(|| ctx.err(line, "missing state"))?)?;
    let block = lt.next().ok_or_else(|| ctx.err(line, "missing input block"))?;
    if lt.next().is_some() {
        return Err(ctx.err(line, "unexpected tokens before `->`"));
    }
    let (block, side) = match block.split_once('|') {
        Some((b, w)) => (b, Some(w)),
        None => (block, None),
    };
    Ok((state, block, side, ctx.num(line, next.trim())?, body.trim()))
}

fn row_key(ctx: &Ctx, line: usize, state: usize, states: usize) -> Result<()> {
    if state >= states {
        return Err(ctx.err(line, format!("state {state} out of range")));
    }
    Ok(())
}

pub fn read_encoder(path: &Path) -> Result<EncoderSpec> {
    parse_encoder(&read(path)?, path)
}

pub fn parse_encoder(text: &str, path: &Path) -> Result<EncoderSpec> {
    let ctx = Ctx { path };
    let mut it = lines(text);
    let h = machine_header(&ctx, &mut it)?;
    if h.kind != "encoder" {
        return Err(ctx.err(0, "file describes a decoder, expected an encoder"));
    }
    let shape = EncoderShape {
        k: h.get(&ctx, "k")?,
        m: h.get(&ctx, "m")?,
        states: h.get(&ctx, "states")?,
        source: h.get(&ctx, "source")?,
        side: h.keys.get("side").copied().unwrap_or(1),
        channel: h.get(&ctx, "channel")?,
    };
    let mut table: BTreeMap<(usize, u64, u64), (Vec<(u64, f64)>, u32, usize)> = BTreeMap::new();
    for (line, l) in it {
        let (state, ub, wb, next, body) = split_row(&ctx, line, l)?;
        row_key(&ctx, line, state, shape.states)?;
        let u = block_index(&parse_block(&ctx, line, ub, shape.source, shape.k)?, shape.source);
        let w = match (wb, shape.side) {
            (None, 1) => 0,
            (Some(wb), side) if side > 1 => block_index(&parse_block(&ctx, line, wb, side, shape.k)?, side),
            _ => return Err(ctx.err(line, "side block present exactly when `side` > 1")),
        };
        let mut emit: BTreeMap<u64, f64> = BTreeMap::new();
        for entry in body.split(';') {
            let (xb, p) = entry.split_once('=').ok_or_else(|| ctx.err(line, "expected `<block>=<p>`"))?;
            let x = block_index(&parse_block(&ctx, line, xb.trim(), shape.channel, shape.m)?, shape.channel);
            *emit.entry(x).or_default() += ctx.num::<f64>(line, p.trim())?;
        }
        if table.insert((state, u, w), (emit.into_iter().collect(), next as u32, line)).is_some() {
            return Err(ctx.err(line, "duplicate row"));
        }
    }
    let source_blocks = (shape.source as u64).pow(shape.k as u32);
    let side_blocks = if shape.side == 1 { 1 } else { (shape.side as u64).pow(shape.k as u32) };
    let expected = shape.states as u64 * source_blocks * side_blocks;
    if table.len() as u64 != expected {
        return Err(ctx.err(0, format!("table has {} rows, expected {expected}", table.len())));
    }
    let (emit, next): (Vec<_>, Vec<_>) = table.into_values().map(|(e, n, _)| (e, n)).unzip();
    EncoderSpec::from_tables(shape, emit, next, h.keys.get("initial").copied().unwrap_or(0))
        .map_err(|e| ctx.err(0, e.to_string()))
}

pub fn format_encoder(enc: &EncoderSpec) -> String {
    let s = *enc.shape();
    let mut out = format!(
        "encoder\nk {}\nm {}\nstates {}\nsource {}\nchannel {}\n",
        s.k, s.m, s.states, s.source, s.channel
    );
    if s.side > 1 {
        let _ = writeln!(out, "side {}", s.side);
    }
    let _ = writeln!(out, "initial {}\nrows", enc.initial_state());
    let side_blocks = if s.side == 1 { 1 } else { s.side.pow(s.k as u32) };
    let mut ub = vec![0u32; s.k];
    let mut wb = vec![0u32; s.k];
    let mut xb = vec![0u32; s.m];
    for state in 0..s.states {
        for u in 0..s.source.pow(s.k as u32) {
            block_from_index(u as u64, s.source, &mut ub);
            for w in 0..side_blocks {
                let mut lhs = format!("{state} {}", fmt_block(&ub, s.source));
                if s.side > 1 {
                    block_from_index(w as u64, s.side, &mut wb);
                    let _ = write!(lhs, "|{}", fmt_block(&wb, s.side));
                }
                let emit: Vec<String> = enc
                    .emission(state, u, w)
                    .iter()
                    .map(|&(x, p)| {
                        block_from_index(x, s.channel, &mut xb);
                        format!("{}={}", fmt_block(&xb, s.channel), fmt_prob(p))
                    })
                    .collect();
                let _ = writeln!(out, "{lhs} -> {} : {}", enc.next_state(state, u, w), emit.join(" ; "));
            }
        }
    }
    out
}

pub fn read_decoder(path: &Path) -> Result<DecoderSpec> {
    parse_decoder(&read(path)?, path)
}

pub fn parse_decoder(text: &str, path: &Path) -> Result<DecoderSpec> {
    let ctx = Ctx { path };
    let mut it = lines(text);
    let h = machine_header(&ctx, &mut it)?;
    if h.kind != "decoder" {
        return Err(ctx.err(0, "file describes an encoder, expected a decoder"));
    }
    let shape = DecoderShape {
        m: h.get(&ctx, "m")?,
        k: h.get(&ctx, "k")?,
        states: h.get(&ctx, "states")?,
        channel: h.get(&ctx, "channel")?,
        source: h.get(&ctx, "source")?,
        side: h.keys.get("side").copied().unwrap_or(1),
    };
    let mut table: BTreeMap<(usize, u64, u64), (u64, u32)> = BTreeMap::new();
    for (line, l) in it {
        let (state, yb, wb, next, body) = split_row(&ctx, line, l)?;
        row_key(&ctx, line, state, shape.states)?;
        let y = block_index(&parse_block(&ctx, line, yb, shape.channel, shape.m)?, shape.channel);
        let w = match (wb, shape.side) {
            (None, 1) => 0,
            (Some(wb), side) if side > 1 => block_index(&parse_block(&ctx, line, wb, side, shape.k)?, side),
            _ => return Err(ctx.err(line, "side block present exactly when `side` > 1")),
        };
        let v = block_index(&parse_block(&ctx, line, body, shape.source, shape.k)?, shape.source);
        if table.insert((state, y, w), (v, next as u32)).is_some() {
            return Err(ctx.err(line, "duplicate row"));
        }
    }
    let channel_blocks = (shape.channel as u64).pow(shape.m as u32);
    let side_blocks = if shape.side == 1 { 1 } else { (shape.side as u64).pow(shape.k as u32) };
    let expected = shape.states as u64 * channel_blocks * side_blocks;
    if table.len() as u64 != expected {
        return Err(ctx.err(0, format!("table has {} rows, expected {expected}", table.len())));
    }
    let (out, next): (Vec<_>, Vec<_>) = table.into_values().unzip();
    DecoderSpec::from_tables(shape, out, next, h.keys.get("initial").copied().unwrap_or(0))
        .map_err(|e| ctx.err(0, e.to_string()))
}

pub fn format_decoder(dec: &DecoderSpec) -> String {
    let s = *dec.shape();
    let mut out = format!(
        "decoder\nm {}\nk {}\nstates {}\nchannel {}\nsource {}\n",
        s.m, s.k, s.states, s.channel, s.source
    );
    if s.side > 1 {
        let _ = writeln!(out, "side {}", s.side);
    }
    let _ = writeln!(out, "initial {}\nrows", dec.initial_state());
    let side_blocks = if s.side == 1 { 1 } else { s.side.pow(s.k as u32) };
    let mut yb = vec![0u32; s.m];
    let mut wb = vec![0u32; s.k];
    let mut vb = vec![0u32; s.k];
    for state in 0..s.states {
        for y in 0..s.channel.pow(s.m as u32) {
            block_from_index(y as u64, s.channel, &mut yb);
            for w in 0..side_blocks {
                let mut lhs = format!("{state} {}", fmt_block(&yb, s.channel));
                if s.side > 1 {
                    block_from_index(w as u64, s.side, &mut wb);
                    let _ = write!(lhs, "|{}", fmt_block(&wb, s.side));
                }
                let (v, next) = dec.output(state, y, w);
                block_from_index(v, s.source, &mut vb);
                let _ = writeln!(out, "{lhs} -> {next} : {}", fmt_block(&vb, s.source));
            }
        }
    }
    out
}

pub fn write_encoder(path: &Path, enc: &EncoderSpec) -> Result<()> {
    write(path, &format_encoder(enc))
}

pub fn write_decoder(path: &Path, dec: &DecoderSpec) -> Result<()> {
    write(path, &format_decoder(dec))
}

/// Path used in messages for in-memory text.
pub fn inline_path() -> PathBuf {
    PathBuf::from("<inline>")
}

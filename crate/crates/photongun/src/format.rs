//! Timestamp files.
//!
//! Binary layout, little-endian throughout:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "PGUN"
//!      4     2  version (1)
//!      6     2  channel count
//!      8     4  resolution in ps (1)
//!     12     4  reserved (0)
//!     16    16  record: t u64 ps, origin u8, channel u8, 6 zero bytes
//! ```
//!
//! The CSV mirror has the header `t_ps,origin,channel`.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use photongun_core::stream::{Origin, PhotonRecord};

pub const MAGIC: [u8; 4] = *b"PGUN";
pub const VERSION: u16 = 1;
pub const RESOLUTION_PS: u32 = 1;
pub const HEADER_LEN: u64 = 16;
pub const RECORD_LEN: u64 = 16;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("truncated file at byte offset {offset}: needed {needed} bytes, found {found}")]
    Truncated { offset: u64, needed: u64, found: u64 },
    #[error("bad magic at byte offset 0: expected \"PGUN\", found {found:?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported version {found} at byte offset 4 (this build reads version {VERSION})")]
    Version { found: u16 },
    #[error("corrupt file at byte offset {offset}: {reason}")]
    Corrupt { offset: u64, reason: String },
    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: u64, reason: String },
}

impl FormatError {
    /// Whether this is a problem with the file contents rather than the
    /// file system.
    pub fn is_malformed(&self) -> bool {
        !matches!(self, FormatError::Io(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub version: u16,
    pub channels: u16,
    pub resolution_ps: u32,
}

impl Header {
    pub fn new(channels: u16) -> Self {
        Self { version: VERSION, channels, resolution_ps: RESOLUTION_PS }
    }

    fn to_bytes(self) -> [u8; HEADER_LEN as usize] {
        let mut buf = [0u8; HEADER_LEN as usize];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..6].copy_from_slice(&self.version.to_le_bytes());
        buf[6..8].copy_from_slice(&self.channels.to_le_bytes());
        buf[8..12].copy_from_slice(&self.resolution_ps.to_le_bytes());
        buf
    }

    fn parse(buf: &[u8; HEADER_LEN as usize]) -> Result<Self, FormatError> {
        let magic: [u8; 4] = buf[0..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(FormatError::BadMagic { found: magic });
        }
        let version = u16::from_le_bytes([buf[4], buf[5]]);
        if version != VERSION {
            return Err(FormatError::Version { found: version });
        }
        let channels = u16::from_le_bytes([buf[6], buf[7]]);
        if channels == 0 {
            return Err(FormatError::Corrupt { offset: 6, reason: "channel count is zero".into() });
        }
        let resolution_ps = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if resolution_ps != RESOLUTION_PS {
            return Err(FormatError::Corrupt {
                offset: 8,
                reason: format!("resolution {resolution_ps} ps is not supported, expected {RESOLUTION_PS}"),
            });
        }
        if buf[12..16] != [0; 4] {
            return Err(FormatError::Corrupt { offset: 12, reason: "reserved field is not zero".into() });
        }
        Ok(Self { version, channels, resolution_ps })
    }
}

fn encode(rec: &PhotonRecord) -> [u8; RECORD_LEN as usize] {
    let mut buf = [0u8; RECORD_LEN as usize];
    buf[0..8].copy_from_slice(&rec.t.to_le_bytes());
    buf[8] = rec.origin as u8;
    buf[9] = rec.channel;
    buf
}

/// Streaming writer; records must arrive in time order.
pub struct BinaryWriter<W: Write> {
    out: W,
    channels: u16,
    last: Option<u64>,
    written: u64,
}

impl<W: Write> BinaryWriter<W> {
    pub fn new(mut out: W, header: Header) -> io::Result<Self> {
        out.write_all(&header.to_bytes())?;
        Ok(Self { out, channels: header.channels, last: None, written: 0 })
    }

    pub fn write(&mut self, rec: &PhotonRecord) -> io::Result<()> {
        if self.last.is_some_and(|t| rec.t < t) {
            return Err(io::Error::new(io::ErrorKind::InvalidInput, "records out of time order"));
        }
        if u16::from(rec.channel) >= self.channels {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("channel {} outside declared count {}", rec.channel, self.channels),
            ));
        }
        self.last = Some(rec.t);
        self.written += 1;
        self.out.write_all(&encode(rec))
    }

    pub fn records_written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Fills `buf` as far as the reader allows and reports how much arrived.
fn read_full(input: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Validating reader. Every record is checked for origin, channel range,
/// zero padding and time order.
pub struct BinaryReader<R: Read> {
    input: R,
    header: Header,
    offset: u64,
    last: u64,
}

impl<R: Read> BinaryReader<R> {
    pub fn new(mut input: R) -> Result<Self, FormatError> {
        let mut buf = [0u8; HEADER_LEN as usize];
        let got = read_full(&mut input, &mut buf)?;
        if got >= 4 && buf[0..4] != MAGIC {
            return Err(FormatError::BadMagic { found: buf[0..4].try_into().unwrap() });
        }
        if got < buf.len() {
            return Err(FormatError::Truncated { offset: 0, needed: HEADER_LEN, found: got as u64 });
        }
        let header = Header::parse(&buf)?;
        Ok(Self { input, header, offset: HEADER_LEN, last: 0 })
    }

    pub fn header(&self) -> Header {
        self.header
    }

    fn next_record(&mut self) -> Result<Option<PhotonRecord>, FormatError> {
        let mut buf = [0u8; RECORD_LEN as usize];
        let got = read_full(&mut self.input, &mut buf)?;
        if got == 0 {
            return Ok(None);
        }
        let at = self.offset;
        if got < buf.len() {
            return Err(FormatError::Truncated { offset: at, needed: RECORD_LEN, found: got as u64 });
        }
        let t = u64::from_le_bytes(buf[0..8].try_into().unwrap());
        let origin = Origin::from_u8(buf[8])
            .ok_or_else(|| FormatError::Corrupt { offset: at + 8, reason: format!("unknown origin tag {}", buf[8]) })?;
        let channel = buf[9];
        if u16::from(channel) >= self.header.channels {
            return Err(FormatError::Corrupt {
                offset: at + 9,
                reason: format!("channel {channel} outside declared count {}", self.header.channels),
            });
        }
        if buf[10..] != [0; 6] {
            return Err(FormatError::Corrupt { offset: at + 10, reason: "nonzero record padding".into() });
        }
        if t < self.last {
            return Err(FormatError::Corrupt {
                offset: at,
                reason: format!("timestamp {t} ps precedes previous record at {} ps", self.last),
            });
        }
        self.last = t;
        self.offset += RECORD_LEN;
        Ok(Some(PhotonRecord { t, origin, channel }))
    }
}

impl<R: Read> Iterator for BinaryReader<R> {
    type Item = Result<PhotonRecord, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimestampFile {
    pub channels: u16,
    pub records: Vec<PhotonRecord>,
}

impl TimestampFile {
    /// Records of one detector channel, still time-ordered.
    pub fn channel(&self, channel: u8) -> Vec<PhotonRecord> {
        self.records.iter().filter(|r| r.channel == channel).copied().collect()
    }
}

pub fn write_binary(path: &Path, file: &TimestampFile) -> io::Result<()> {
    let mut w = BinaryWriter::new(BufWriter::new(File::create(path)?), Header::new(file.channels))?;
    for rec in &file.records {
        w.write(rec)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_binary_from(input: impl Read) -> Result<TimestampFile, FormatError> {
    let reader = BinaryReader::new(input)?;
    let channels = reader.header().channels;
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    Ok(TimestampFile { channels, records })
}

pub fn read_binary(path: &Path) -> Result<TimestampFile, FormatError> {
    read_binary_from(BufReader::new(File::open(path)?))
}

pub const CSV_HEADER: [&str; 3] = ["t_ps", "origin", "channel"];

/// Streaming writer for the CSV mirror.
pub struct CsvWriter<W: Write> {
    out: csv::Writer<W>,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(out: W) -> Result<Self, FormatError> {
        let mut out = csv::Writer::from_writer(out);
        out.write_record(CSV_HEADER).map_err(csv_io)?;
        Ok(Self { out })
    }

    pub fn write(&mut self, r: &PhotonRecord) -> Result<(), FormatError> {
        self.out.write_record([r.t.to_string(), (r.origin as u8).to_string(), r.channel.to_string()]).map_err(csv_io)
    }

    pub fn finish(mut self) -> Result<(), FormatError> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn write_csv_to(out: impl Write, records: &[PhotonRecord]) -> Result<(), FormatError> {
    let mut w = CsvWriter::new(out)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn write_csv(path: &Path, records: &[PhotonRecord]) -> Result<(), FormatError> {
    write_csv_to(BufWriter::new(File::create(path)?), records)
}

fn csv_io(e: csv::Error) -> FormatError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => FormatError::Io(e),
        other => FormatError::Csv { line: 0, reason: format!("{other:?}") },
    }
}

/// Reads the CSV mirror. The channel count is one past the highest channel
/// seen (at least one).
pub fn read_csv_from(input: impl Read) -> Result<TimestampFile, FormatError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers().map_err(|e| FormatError::Csv { line: 1, reason: e.to_string() })?;
    if headers.iter().map(str::trim).ne(CSV_HEADER) {
        return Err(FormatError::Csv {
            line: 1,
            reason: format!(
                "expected header t_ps,origin,channel, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut records = Vec::new();
    let mut max_channel = 0u8;
    let mut last = 0u64;
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.into_kind() {
                csv::ErrorKind::Io(e) => FormatError::Io(e),
                other => FormatError::Csv { line, reason: format!("{other:?}") },
            }
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |reason: String| FormatError::Csv { line, reason };
        let t: u64 = row[0].trim().parse().map_err(|e| bad(format!("t_ps {:?}: {e}", &row[0])))?;
        let origin: u8 = row[1].trim().parse().map_err(|e| bad(format!("origin {:?}: {e}", &row[1])))?;
        let origin = Origin::from_u8(origin).ok_or_else(|| bad(format!("unknown origin tag {origin}")))?;
        let channel: u8 = row[2].trim().parse().map_err(|e| bad(format!("channel {:?}: {e}", &row[2])))?;
        if t < last {
            return Err(bad(format!("timestamp {t} ps precedes previous record at {last} ps")));
        }
        last = t;
        max_channel = max_channel.max(channel);
        records.push(PhotonRecord { t, origin, channel });
    }
    Ok(TimestampFile { channels: u16::from(max_channel) + 1, records })
}

pub fn read_csv(path: &Path) -> Result<TimestampFile, FormatError> {
    read_csv_from(BufReader::new(File::open(path)?))
}

/// Chooses the reader from the extension: `.csv` is the text mirror,
/// anything else is binary.
pub fn read_any(path: &Path) -> Result<TimestampFile, FormatError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_csv(path)
    } else {
        read_binary(path)
    }
}

//! Sort records and their binary spill encoding.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One typed key column value. Integers compare numerically, strings
/// bytewise.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyType {
    Int,
    Str,
}

impl KeyType {
    pub fn parse_value(self, text: &str) -> Result<Value, String> {
        match self {
            KeyType::Int => text
                .trim()
                .parse::<i64>()
                .map(Value::Int)
                .map_err(|e| format!("{text:?} is not an integer: {e}")),
            KeyType::Str => Ok(Value::Str(text.to_owned())),
        }
    }
}

impl FromStr for KeyType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" => Ok(KeyType::Int),
            "str" => Ok(KeyType::Str),
            other => Err(format!("unknown key type {other:?}; expected int or str")),
        }
    }
}

/// A record: key values in target-order position, plus opaque payload.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Record {
    pub key: Vec<Value>,
    pub payload: Vec<u8>,
}

impl Record {
    pub fn new(key: Vec<Value>, payload: Vec<u8>) -> Self {
        Self { key, payload }
    }

    /// Compares key columns `from..`.
    pub fn cmp_from(&self, other: &Record, from: usize) -> Ordering {
        self.key[from..].cmp(&other.key[from..])
    }

    pub fn same_prefix(&self, other: &Record, len: usize) -> bool {
        self.key[..len] == other.key[..len]
    }

    pub(crate) fn encoded_len(&self) -> usize {
        let keys: usize = self
            .key
            .iter()
            .map(|v| match v {
                Value::Int(_) => 9,
                Value::Str(s) => 5 + s.len(),
            })
            .sum();
        2 + keys + 4 + self.payload.len()
    }

    /// Writes `u32 length` followed by the body; returns bytes written.
    pub(crate) fn encode<W: Write>(&self, w: &mut W) -> io::Result<u64> {
        let body = self.encoded_len();
        w.write_all(&(body as u32).to_le_bytes())?;
        w.write_all(&(self.key.len() as u16).to_le_bytes())?;
        for v in &self.key {
            match v {
                Value::Int(i) => {
                    w.write_all(&[0])?;
                    w.write_all(&i.to_le_bytes())?;
                }
                Value::Str(s) => {
                    w.write_all(&[1])?;
                    w.write_all(&(s.len() as u32).to_le_bytes())?;
                    w.write_all(s.as_bytes())?;
                }
            }
        }
        w.write_all(&(self.payload.len() as u32).to_le_bytes())?;
        w.write_all(&self.payload)?;
        Ok(4 + body as u64)
    }

    /// Reads one record, or `None` at a clean end of stream.
    pub(crate) fn decode<R: Read>(r: &mut R) -> io::Result<Option<Record>> {
        let mut len = [0u8; 4];
        match r.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e),
        }
        let mut body = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut body)?;
        let mut cur = &body[..];
        let bad = || io::Error::new(io::ErrorKind::InvalidData, "corrupt spill record");
        let mut take = |n: usize| -> io::Result<&[u8]> {
            if cur.len() < n {
                return Err(bad());
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        let arity = u16::from_le_bytes(take(2)?.try_into().unwrap()) as usize;
        let mut key = Vec::with_capacity(arity);
        for _ in 0..arity {
            match take(1)?[0] {
                0 => key.push(Value::Int(i64::from_le_bytes(take(8)?.try_into().unwrap()))),
                1 => {
                    let n = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
                    let s = String::from_utf8(take(n)?.to_vec()).map_err(|_| bad())?;
                    key.push(Value::Str(s));
                }
                _ => return Err(bad()),
            }
        }
        let n = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let payload = take(n)?.to_vec();
        Ok(Some(Record { key, payload }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_round_trip() {
        let recs = vec![
            Record::new(vec![Value::Int(-5), Value::Str("héllo".into())], b"xyz".to_vec()),
            Record::new(vec![], vec![]),
        ];
        let mut buf = Vec::new();
        let mut total = 0;
        for r in &recs {
            total += r.encode(&mut buf).unwrap();
        }
        assert_eq!(total as usize, buf.len());
        let mut cur = &buf[..];
        for r in &recs {
            assert_eq!(Record::decode(&mut cur).unwrap().as_ref(), Some(r));
        }
        assert_eq!(Record::decode(&mut cur).unwrap(), None);
    }

    #[test]
    fn typed_comparison() {
        assert!(Value::Int(9) < Value::Int(10));
        assert!(Value::Str("10".into()) < Value::Str("9".into()));
        let a = Record::new(vec![Value::Int(1), Value::Int(5)], vec![]);
        let b = Record::new(vec![Value::Int(2), Value::Int(3)], vec![]);
        assert_eq!(a.cmp_from(&b, 0), Ordering::Less);
        assert_eq!(a.cmp_from(&b, 1), Ordering::Greater);
    }

    #[test]
    fn key_type_parsing() {
        assert_eq!("int".parse::<KeyType>().unwrap().parse_value("42").unwrap(), Value::Int(42));
        assert!(KeyType::Int.parse_value("x").is_err());
        assert!("float".parse::<KeyType>().is_err());
    }
}

//! JSON has no infinities; these adapters write non-finite floats as the
//! strings `"inf"`, `"-inf"` and `"nan"` and read them back.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Text(String),
}

fn to_repr(v: f64) -> Repr {
    if v.is_finite() {
        Repr::Num(v)
    } else if v.is_nan() {
        Repr::Text("nan".into())
    } else if v > 0.0 {
        Repr::Text("inf".into())
    } else {
        Repr::Text("-inf".into())
    }
}

fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
    match r {
        Repr::Num(v) => Ok(v),
        Repr::Text(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            _ => Err(E::custom(format!("expected a number, \"inf\", \"-inf\" or \"nan\", got {s:?}"))),
        },
    }
}

pub mod scalar {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|&x| to_repr(x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}

pub mod map {
    use super::*;

    pub fn serialize<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, &v)| (k, to_repr(v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        BTreeMap::<String, Repr>::deserialize(d)?
            .into_iter()
            .map(|(k, v)| from_repr::<D::Error>(v).map(|v| (k, v)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Probe {
        #[serde(with = "scalar")]
        a: f64,
        #[serde(with = "vec")]
        b: Vec<f64>,
        #[serde(with = "map")]
        c: BTreeMap<String, f64>,
    }

    #[test]
    fn non_finite_values_round_trip() {
        let p = Probe {
            a: f64::INFINITY,
            b: vec![1.5, f64::NEG_INFINITY],
            c: BTreeMap::from([("x".to_owned(), f64::INFINITY), ("y".to_owned(), -2.0)]),
        };
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"a":"inf","b":[1.5,"-inf"],"c":{"x":"inf","y":-2.0}}"#);
        assert_eq!(serde_json::from_str::<Probe>(&s).unwrap(), p);
        let nan: Probe = serde_json::from_str(r#"{"a":"nan","b":[],"c":{}}"#).unwrap();
        assert!(nan.a.is_nan());
        assert!(serde_json::from_str::<Probe>(r#"{"a":"big","b":[],"c":{}}"#).is_err());
    }
}

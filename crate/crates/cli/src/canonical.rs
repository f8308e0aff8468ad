//! Canonical JSON: sorted keys, floats with 17 significant digits, one
//! trailing newline.

use serde::Serialize;
use serde_json::Value;

/// Formats a float with 17 significant digits. Exponents in `-7..=16` use
/// positional notation, everything else scientific.
pub fn format_float(v: f64) -> String {
    if !v.is_finite() {
        return "null".into();
    }
    let v = if v == 0.0 { 0.0 } else { v };
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-7..=16).contains(&exp) {
        format!("{v:.*}", (16 - exp) as usize)
    } else {
        format!("{mantissa}e{exp}")
    }
}

fn write(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (_, Some(u)) => out.push_str(&u.to_string()),
            _ => out.push_str(&format_float(n.as_f64().expect("float"))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push(':');
                write(&map[k], out);
            }
            out.push('}');
        }
    }
}

pub fn to_canonical(value: &Value) -> String {
    let mut out = String::new();
    write(value, &mut out);
    out.push('\n');
    out
}

pub fn canonical<T: Serialize>(value: &T) -> serde_json::Result<String> {
    Ok(to_canonical(&serde_json::to_value(value)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats() {
        assert_eq!(format_float(0.375), "0.37500000000000000");
        assert_eq!(format_float(1.0), "1.0000000000000000");
        assert_eq!(format_float(0.0), "0.0000000000000000");
        assert_eq!(format_float(-0.0), "0.0000000000000000");
        assert_eq!(format_float(1e-9), "1.0000000000000001e-9");
        assert_eq!(format_float(2.0 / 3.0), "0.66666666666666663");
        assert_eq!(format_float(f64::NAN), "null");
        for v in [0.1, 1.0 / 3.0, 12.0 - 8.0 * 2f64.sqrt(), 1e-7, 123456.789, 1e20, 5e-324] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn sorted_and_terminated() {
        let v = json!({"b": 1, "a": [0.5, true, null], "c": {"z": "x", "y": -2}});
        assert_eq!(to_canonical(&v), "{\"a\":[0.50000000000000000,true,null],\"b\":1,\"c\":{\"y\":-2,\"z\":\"x\"}}\n");
    }
}

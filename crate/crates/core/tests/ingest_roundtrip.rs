use error_parity::ingest::{read_csv, Schema};
use proptest::prelude::*;

fn schema() -> Schema {
    Schema::new("truth").pred("m1").pred("m2").label("group").label_source("share")
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e12f64..1e12, (-1000i64..1000).prop_map(|v| v as f64), Just(0.0), Just(-0.0)]
}

proptest! {
    #[test]
    fn write_then_read_is_identity(
        rows in prop::collection::vec(
            (finite(), finite(), finite(), 0.0f64..1.0, "[A-Za-z][A-Za-z0-9_, ]{0,5}[A-Za-z]", "[a-z]{0,4}"),
            1..40,
        ),
        delimiter in prop::sample::select(vec![b',', b';', b'\t']),
    ) {
        let sep = delimiter as char;
        let quote = |s: &str| if s.contains(sep) || s.contains('"') { format!("\"{s}\"") } else { s.to_string() };
        let mut text = ["note", "group", "share", "truth", "m1", "m2"].join(&sep.to_string());
        text.push('\n');
        for (t, a, b, share, group, note) in &rows {
            let cells = [quote(note), quote(group), share.to_string(), t.to_string(), a.to_string(), b.to_string()];
            text.push_str(&cells.join(&sep.to_string()));
            text.push('\n');
        }
        let mut schema = schema();
        schema.delimiter = delimiter;
        let first = read_csv(text.as_bytes(), &schema).unwrap();
        prop_assert_eq!(first.len(), rows.len());
        prop_assert_eq!(&first.label("group").unwrap()[0], &rows[0].4);

        let mut out = Vec::new();
        first.write_csv(&mut out, delimiter).unwrap();
        let second = read_csv(out.as_slice(), &schema).unwrap();
        prop_assert_eq!(&second, &first);
        for (x, (t, ..)) in second.truth.values.iter().zip(&rows) {
            prop_assert_eq!(x.to_bits(), t.to_bits());
        }
    }
}

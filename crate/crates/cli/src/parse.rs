//! Literal parsers shared by flags and the config file.

use num_complex::Complex64;

/// Non-negative integer, also accepting exact scientific forms such as `1e7`.
pub fn count(text: &str) -> Result<u64, String> {
    let t = text.trim().replace('_', "");
    if let Ok(n) = t.parse::<u64>() {
        return Ok(n);
    }
    let x: f64 = t.parse().map_err(|_| format!("not an integer: {text:?}"))?;
    if x >= 0.0 && x.fract() == 0.0 && x <= 9_007_199_254_740_992.0 {
        Ok(x as u64)
    } else {
        Err(format!("not a non-negative integer: {text:?}"))
    }
}

/// `a:b` with both ends in [`count`] syntax.
pub fn window(text: &str) -> Result<(u64, u64), String> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {text:?}"))?;
    Ok((count(a)?, count(b)?))
}

/// Comma-separated list of [`count`] values.
pub fn count_list(text: &str) -> Result<Vec<u64>, String> {
    text.split(',').filter(|s| !s.trim().is_empty()).map(count).collect()
}

/// `a+bi`, `a-bi` or a bare real `a`.
pub fn complex(text: &str) -> Result<Complex64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("expected a complex literal like \"0.5+14.1i\", got {text:?}");
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // the sign separating the parts is the last one not opening an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re: f64 = body[..split].parse().map_err(|_| bad())?;
    let im_text = &body[split..];
    let im: f64 = match im_text {
        "+" => 1.0,
        "-" => -1.0,
        _ => im_text.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

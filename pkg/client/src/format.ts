/**
 * Exact two-decimal rendering of a float64, matching the harness side
 * byte-for-byte.
 *
 * toFixed() rounds ties away from zero, but the harness renders coordinates
 * with round-half-even on the exact binary value. To agree on every double we
 * decompose the float into mantissa * 2^exponent with BigInt and round
 * value*100 exactly, ties to even. Negative zero renders as "0.00".
 */
export function formatFixed2(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`non-finite coordinate: ${value}`);
  }
  if (value === 0) {
    return "0.00";
  }
  const negative = value < 0;
  const view = new DataView(new ArrayBuffer(8));
  view.setFloat64(0, Math.abs(value));
  const bits = view.getBigUint64(0);
  const exponentBits = Number((bits >> 52n) & 0x7ffn);
  const fractionBits = bits & ((1n << 52n) - 1n);
  let mantissa: bigint;
  let exponent: number;
  if (exponentBits === 0) {
    mantissa = fractionBits;
    exponent = -1074;
  } else {
    mantissa = fractionBits | (1n << 52n);
    exponent = exponentBits - 1075;
  }

  // centi = round_half_even(|value| * 100), computed on the exact value
  let centi: bigint;
  const numer = mantissa * 100n;
  if (exponent >= 0) {
    centi = numer << BigInt(exponent);
  } else {
    const denom = 1n << BigInt(-exponent);
    const quotient = numer / denom;
    const remainder = numer % denom;
    const doubled = remainder * 2n;
    if (doubled > denom || (doubled === denom && (quotient & 1n) === 1n)) {
      centi = quotient + 1n;
    } else {
      centi = quotient;
    }
  }

  if (centi === 0n) {
    return "0.00";
  }
  const whole = centi / 100n;
  const cents = centi % 100n;
  const sign = negative ? "-" : "";
  return `${sign}${whole}.${cents.toString().padStart(2, "0")}`;
}

export function formatPair(x: number, y: number): string {
  return `(${formatFixed2(x)}, ${formatFixed2(y)})`;
}

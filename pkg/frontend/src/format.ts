export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function percent(fraction: number): string {
  return `${Math.round(fraction * 100)}%`;
}

export function money(value: number | null | undefined): string {
  if (value === null || value === undefined) return "-";
  return Number.isInteger(value) ? value.toFixed(1) : String(value);
}

export function signed(value: number): string {
  const text = money(value);
  return value > 0 ? `+${text}` : text;
}

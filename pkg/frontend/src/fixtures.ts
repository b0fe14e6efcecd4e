/** Fixture subjects offered by the start screen's prescription picker.
 *
 * Standard gains are per-band prescriptive starting points in dB for the
 * five bands 0-500, 500-1000, 1000-2000, 2000-4000, 4000-6000 Hz.
 */

export interface FixtureSubject {
  subject: number;
  standardGainsDb: number[];
}

export const FIXTURE_SUBJECTS: FixtureSubject[] = [
  { subject: 1, standardGainsDb: [4, 2, 12, 30, 28] },
  { subject: 2, standardGainsDb: [4, 9, 8, 22, 21] },
  { subject: 3, standardGainsDb: [-3, -5, 1, 22, 19] },
  { subject: 4, standardGainsDb: [7, 6, 12, 21, 28] },
  { subject: 5, standardGainsDb: [4, -4, -2, 22, 24] },
  { subject: 6, standardGainsDb: [4, 2, 14, 27, 35] },
  { subject: 7, standardGainsDb: [16, 0, 8, 13, 19] },
  { subject: 8, standardGainsDb: [0, 11, 30, 27, 19] },
];

export const BAND_LABELS = [
  "0-500 Hz",
  "500-1000 Hz",
  "1000-2000 Hz",
  "2000-4000 Hz",
  "4000-6000 Hz",
];

/** Validate a custom prescription entry: exactly five finite dB values. */
export function parsePrescription(text: string): number[] {
  const parts = text.split(",").map((p) => Number(p.trim()));
  if (parts.length !== BAND_LABELS.length || parts.some((v) => !Number.isFinite(v))) {
    throw new Error(`prescription needs ${BAND_LABELS.length} comma-separated dB values`);
  }
  return parts;
}

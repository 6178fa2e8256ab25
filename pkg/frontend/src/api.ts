import type {
  BlockView,
  ChainInfo,
  DoctorRecordView,
  HistoryEvent,
  LoginResponse,
  MedicalDelta,
  MutationResponse,
  NameRow,
  PatientRecord,
  PersonalDetails,
  TxLookup,
} from "./types.js";

/** Gateway errors always arrive as {code, message}; keep both. */
export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = typeof fetch;

/**
 * Typed client for the gateway's HTTP+JSON routes. The token source is a
 * callback so an expired session immediately stops authenticating calls.
 */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly getToken: () => string | null,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    const token = this.getToken();
    if (token !== null) {
      headers["Authorization"] = `Bearer ${token}`;
    }
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
    }
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let data: unknown = null;
    if (text.length > 0) {
      try {
        data = JSON.parse(text);
      } catch {
        data = null;
      }
    }
    if (!response.ok) {
      const err = (data ?? {}) as { code?: string; message?: string };
      throw new ApiError(
        response.status,
        err.code ?? "unknown",
        err.message ?? response.statusText,
      );
    }
    return data as T;
  }

  // -- authentication --

  login(subjectId: string, password: string): Promise<LoginResponse> {
    return this.request("POST", "/auth/login", {
      id: subjectId,
      password,
    });
  }

  // -- admin --

  createPatient(
    patientId: string,
    password: string,
    personal: Partial<PersonalDetails>,
  ): Promise<MutationResponse<{ patient_id: string }>> {
    return this.request("POST", "/admin/patients", {
      patient_id: patientId,
      password,
      personal,
    });
  }

  deletePatient(
    patientId: string,
  ): Promise<MutationResponse<{ patient_id: string; deleted: boolean }>> {
    return this.request("DELETE", `/admin/patients/${patientId}`);
  }

  listPatients(): Promise<{ patients: NameRow[] }> {
    return this.request("GET", "/admin/patients");
  }

  registerDoctor(
    doctorId: string,
    displayName: string,
    department: string,
    password: string,
  ): Promise<MutationResponse<{ doctor_id: string }>> {
    return this.request("POST", "/admin/doctors", {
      doctor_id: doctorId,
      display_name: displayName,
      department,
      password,
    });
  }

  // -- patient --

  getPatient(patientId: string): Promise<PatientRecord> {
    return this.request("GET", `/patients/${patientId}`);
  }

  updatePersonal(
    patientId: string,
    delta: Partial<PersonalDetails>,
  ): Promise<MutationResponse<{ patient_id: string }>> {
    return this.request("PATCH", `/patients/${patientId}/personal`, delta);
  }

  changePassword(
    patientId: string,
    oldPassword: string,
    newPassword: string,
  ): Promise<MutationResponse<{ patient_id: string; password_updated: boolean }>> {
    return this.request("PATCH", `/patients/${patientId}/password`, {
      old_password: oldPassword,
      new_password: newPassword,
    });
  }

  grantAccess(
    patientId: string,
    doctorId: string,
  ): Promise<MutationResponse<{ patient_id: string; granted: string[] }>> {
    return this.request("POST", `/patients/${patientId}/grants`, {
      doctor_id: doctorId,
    });
  }

  revokeAccess(
    patientId: string,
    doctorId: string,
  ): Promise<MutationResponse<{ patient_id: string; granted: string[] }>> {
    return this.request("DELETE", `/patients/${patientId}/grants/${doctorId}`);
  }

  // -- doctor --

  doctorPatients(): Promise<{ patients: NameRow[] }> {
    return this.request("GET", "/doctor/patients");
  }

  doctorGetPatient(patientId: string): Promise<DoctorRecordView> {
    return this.request("GET", `/doctor/patients/${patientId}`);
  }

  appendMedical(
    patientId: string,
    delta: MedicalDelta,
  ): Promise<MutationResponse<{ patient_id: string; updated: string[] }>> {
    return this.request("PATCH", `/doctor/patients/${patientId}/medical`, delta);
  }

  // -- explorer --

  explorerInfo(): Promise<ChainInfo> {
    return this.request("GET", "/explorer/info");
  }

  explorerBlock(number: number): Promise<BlockView> {
    return this.request("GET", `/explorer/blocks/${number}`);
  }

  explorerTx(txId: string): Promise<TxLookup> {
    return this.request("GET", `/explorer/tx/${txId}`);
  }

  patientHistory(patientId: string): Promise<{ events: HistoryEvent[] }> {
    return this.request("GET", `/explorer/patients/${patientId}/history`);
  }
}

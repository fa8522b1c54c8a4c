import { Api } from "./api.js";
import { mountApp } from "./app.js";

const app = mountApp(document, new Api(""));
void app.start();
